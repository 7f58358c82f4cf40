#pragma once

#include "mmfusion/clinical.hpp"
#include "mmfusion/dataset.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mmfusion {

struct SynthClass {
    std::string name;
    std::vector<double> mean;
    double stddev = 1.0;
    /// Category distribution per block; nullopt means the block never occurs
    /// for this class (e.g. calcification fields on a mass lesion).
    std::array<std::optional<std::vector<double>>, kNumClinicalBlocks> clinical;
    std::size_t train_count = 0;
    std::size_t test_count = 0;
};

/// Class-conditional Gaussian embeddings plus categorical clinical fields.
///
/// JSON schema:
///   {
///     "seed": 7, "image_dim": 32,
///     "block_missing_rate": {"breast_density": 0.1, ...},   // optional, default 0
///     "classes": [{
///        "name": "benign_mass", "train": 500, "test": 125, "stddev": 1.0,
///        "mean": [..image_dim..]  or  {"<index>": value, ...}   // sparse, rest 0
///        "clinical": {"mass_shape": [..8 probabilities..], ...}
///     }, ...]
///   }
struct SynthSpec {
    std::uint64_t seed = 0;
    std::size_t image_dim = 0;
    std::array<double, kNumClinicalBlocks> block_missing_rate{};
    std::vector<SynthClass> classes;

    void validate() const;
    std::vector<std::string> class_names() const;
    static SynthSpec from_json(std::string_view text);
    static SynthSpec load(const std::filesystem::path& path);
};

struct SynthData {
    std::vector<SampleRecord> train;
    std::vector<SampleRecord> test;
};

SynthData generate_synth(const SynthSpec& spec, const ClinicalVocabulary& vocab);

/// Writes `train.csv` and `test.csv` into `out_dir` (created if needed).
void gen_synth(const SynthSpec& spec, const ClinicalVocabulary& vocab, const std::filesystem::path& out_dir);

} // namespace mmfusion
