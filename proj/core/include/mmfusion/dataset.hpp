#pragma once

#include "mmfusion/clinical.hpp"
#include "mmfusion/trainer.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mmfusion {

struct SampleRecord {
    std::string id;
    std::string label;
    std::vector<double> image_embedding;
    ClinicalRecord clinical;

    bool operator==(const SampleRecord&) const = default;
};

struct DatasetSchema {
    std::vector<std::string> class_names;
    std::size_t image_dim = 0;
};

/// Comma-separated, one header line then one row per sample:
///   id,label,breast_density,mass_shape,mass_margins,calcification_type,
///   calcification_distribution,e0,...,e{image_dim-1}
/// An empty clinical cell means missing. Cells may not contain commas or
/// quotes; a '|' in a clinical cell marks a multi-label lesion and is rejected.
std::string dataset_header(std::size_t image_dim);

/// Validates every row or throws (ParseError / VocabularyError /
/// DimensionError) with the 1-based line number; never drops rows.
std::vector<SampleRecord> parse_dataset(std::string_view text, const ClinicalVocabulary& vocab,
                                        const DatasetSchema& schema);
std::vector<SampleRecord> load_dataset(const std::filesystem::path& path, const ClinicalVocabulary& vocab,
                                       const DatasetSchema& schema);

std::string format_dataset(std::span<const SampleRecord> records, std::size_t image_dim);
void write_dataset(const std::filesystem::path& path, std::span<const SampleRecord> records,
                   std::size_t image_dim);

std::vector<Example> to_examples(std::span<const SampleRecord> records, const ClinicalVocabulary& vocab,
                                 const std::vector<std::string>& class_names);

} // namespace mmfusion
