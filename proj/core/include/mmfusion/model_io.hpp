#pragma once

#include "mmfusion/fusion.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace mmfusion {

/// Current model file version.
inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Little-endian binary layout:
///   "MMFUSION"            8-byte magic
///   u32 version
///   u8  variant, u8 gates_from_projected
///   u64 image_dim, clinical_dim, proj_dim, hidden_dim, num_classes
///   u32 parameter count, then per parameter:
///       u32 name length, name bytes, u32 rank, u64 dims[rank], f64 values
///   u64 FNV-1a hash of every preceding byte
/// Nothing may follow the hash.
std::string serialize_model(const FusionModel& model);

/// Throws PersistenceError on any corruption, VariantMismatchError when
/// `expected` is given and differs from the stored variant.
FusionModel deserialize_model(std::string_view bytes, std::optional<Variant> expected = std::nullopt);

void save_model(const FusionModel& model, const std::filesystem::path& path);
FusionModel load_model(const std::filesystem::path& path, std::optional<Variant> expected = std::nullopt);

} // namespace mmfusion
