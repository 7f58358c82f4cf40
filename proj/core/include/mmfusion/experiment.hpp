#pragma once

#include "mmfusion/clinical.hpp"
#include "mmfusion/fusion.hpp"
#include "mmfusion/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mmfusion {

/// One experiment, read from JSON. Relative paths resolve against the config
/// file's directory. Every key is documented in README.md; unknown keys are
/// rejected.
struct ExperimentConfig {
    std::filesystem::path train_data;
    std::filesystem::path test_data;
    std::filesystem::path vocabulary;  // empty: built-in defaults
    std::filesystem::path output_dir = "out";
    std::vector<std::string> class_names{"benign_mass", "malignant_mass", "benign_calcification",
                                         "malignant_calcification"};
    FusionConfig model;
    TrainConfig train;
    double eval_mask_probability = 0.0;
    std::uint64_t eval_seed = 0;

    void validate() const;
    ClinicalVocabulary load_vocabulary() const;

    static ExperimentConfig from_json(std::string_view text, const std::filesystem::path& base_dir = {});
    static ExperimentConfig load(const std::filesystem::path& path);
};

} // namespace mmfusion
