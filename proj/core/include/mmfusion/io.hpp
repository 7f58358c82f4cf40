#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace mmfusion {

/// Whole-file read; nullopt if the file cannot be opened.
std::optional<std::string> read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames it over `path`, so readers
/// never observe a partial file. Throws PersistenceError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Strict full-token parse; nullopt on trailing garbage or empty input.
std::optional<double> parse_double(std::string_view text);

} // namespace mmfusion
