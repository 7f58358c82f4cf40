#include "mmfusion/clinical.hpp"

#include "mmfusion/errors.hpp"
#include "mmfusion/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace mmfusion {

namespace {

constexpr std::array<std::string_view, kNumClinicalBlocks> kBlockNames{
    "breast_density", "mass_shape", "mass_margins", "calcification_type",
    "calcification_distribution"};

// Characters that would break the delimiter-separated dataset format.
constexpr std::string_view kForbiddenNameChars = ",|\"\r\n";

} // namespace

std::string_view clinical_block_name(std::size_t block) { return kBlockNames.at(block); }

ClinicalVocabulary::ClinicalVocabulary(Blocks blocks) : blocks_(std::move(blocks)) {
    for (std::size_t b = 0; b < kNumClinicalBlocks; ++b) {
        const auto& names = blocks_[b];
        if (names.size() != kClinicalBlockSizes[b]) {
            throw ConfigError("vocabulary block '" + std::string(kBlockNames[b]) + "' must have " +
                              std::to_string(kClinicalBlockSizes[b]) + " categories, got " +
                              std::to_string(names.size()));
        }
        std::set<std::string_view> seen;
        for (const auto& name : names) {
            if (name.empty() || name.find_first_of(kForbiddenNameChars) != std::string::npos) {
                throw ConfigError("vocabulary block '" + std::string(kBlockNames[b]) +
                                  "' has an invalid category name '" + name + "'");
            }
            if (!seen.insert(name).second) {
                throw ConfigError("vocabulary block '" + std::string(kBlockNames[b]) +
                                  "' repeats category '" + name + "'");
            }
        }
    }
}

ClinicalVocabulary ClinicalVocabulary::defaults() {
    return ClinicalVocabulary(Blocks{
        std::vector<std::string>{"entirely_fatty", "scattered_fibroglandular", "heterogeneously_dense",
                                 "extremely_dense"},
        std::vector<std::string>{"round", "oval", "irregular", "lobulated", "architectural_distortion",
                                 "asymmetric_breast_tissue", "focal_asymmetric_density", "lymph_node"},
        std::vector<std::string>{"circumscribed", "ill_defined", "spiculated", "microlobulated",
                                 "obscured"},
        std::vector<std::string>{"amorphous", "punctate", "vascular", "pleomorphic",
                                 "fine_linear_branching", "lucent_center", "round_and_regular",
                                 "coarse", "dystrophic", "eggshell", "large_rodlike", "milk_of_calcium",
                                 "skin", "lucent_centered"},
        std::vector<std::string>{"clustered", "linear", "regional", "segmental", "diffusely_scattered"},
    });
}

ClinicalVocabulary ClinicalVocabulary::from_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("vocabulary is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("vocabulary must be a JSON object");
    Blocks blocks;
    for (std::size_t b = 0; b < kNumClinicalBlocks; ++b) {
        const std::string key(kBlockNames[b]);
        auto it = doc.find(key);
        if (it == doc.end() || !it->is_array()) {
            throw ConfigError("vocabulary is missing array '" + key + "'");
        }
        for (const auto& v : *it) {
            if (!v.is_string()) throw ConfigError("vocabulary '" + key + "' must hold strings");
            blocks[b].push_back(v.get<std::string>());
        }
    }
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (std::find(kBlockNames.begin(), kBlockNames.end(), it.key()) == kBlockNames.end()) {
            throw ConfigError("vocabulary has unknown key '" + it.key() + "'");
        }
    }
    return ClinicalVocabulary(std::move(blocks));
}

ClinicalVocabulary ClinicalVocabulary::load(const std::filesystem::path& path) {
    auto text = read_file(path);
    if (!text) throw ConfigError("cannot read vocabulary file " + path.string());
    return from_json(*text);
}

std::string ClinicalVocabulary::to_json() const {
    nlohmann::ordered_json doc;
    for (std::size_t b = 0; b < kNumClinicalBlocks; ++b) doc[std::string(kBlockNames[b])] = blocks_[b];
    return doc.dump(2) + "\n";
}

std::optional<std::size_t> ClinicalVocabulary::index_of(std::size_t block, std::string_view name) const {
    const auto& names = blocks_.at(block);
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
}

std::size_t ClinicalVector::present_blocks() const noexcept {
    return static_cast<std::size_t>(std::count(presence.begin(), presence.end(), true));
}

ClinicalVector encode(const ClinicalRecord& record, const ClinicalVocabulary& vocab) {
    ClinicalVector out;
    for (std::size_t b = 0; b < kNumClinicalBlocks; ++b) {
        const auto& field = record.fields[b];
        if (!field) continue;
        auto idx = vocab.index_of(b, *field);
        if (!idx) {
            throw VocabularyError("unknown category '" + *field + "' in block '" +
                                  std::string(kBlockNames[b]) + "'");
        }
        out.values[kClinicalBlockOffsets[b] + *idx] = 1.0;
        out.presence[b] = true;
    }
    return out;
}

ClinicalRecord decode(const ClinicalVector& vec, const ClinicalVocabulary& vocab) {
    ClinicalRecord out;
    for (std::size_t b = 0; b < kNumClinicalBlocks; ++b) {
        std::optional<std::size_t> hot;
        for (std::size_t i = 0; i < kClinicalBlockSizes[b]; ++i) {
            const double v = vec.values[kClinicalBlockOffsets[b] + i];
            if (v == 0.0) continue;
            if (v != 1.0 || hot) {
                throw ContractError("clinical block '" + std::string(kBlockNames[b]) + "' is not one-hot");
            }
            hot = i;
        }
        if (hot.has_value() != vec.presence[b]) {
            throw ContractError("clinical block '" + std::string(kBlockNames[b]) +
                                "' disagrees with its presence flag");
        }
        if (hot) out.fields[b] = vocab.categories(b)[*hot];
    }
    return out;
}

ClinicalVector mask_clinical(const ClinicalVector& vec, bool drop) {
    return drop ? ClinicalVector{} : vec;
}

std::vector<bool> sample_drop_flags(std::size_t n, double p, Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ConfigError("mask probability must lie in [0, 1], got " + format_double(p));
    }
    std::bernoulli_distribution coin(p);
    std::vector<bool> flags(n);
    for (std::size_t i = 0; i < n; ++i) flags[i] = coin(rng);
    return flags;
}

} // namespace mmfusion
