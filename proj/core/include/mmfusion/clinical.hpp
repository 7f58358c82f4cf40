#pragma once

#include "mmfusion/random.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mmfusion {

inline constexpr std::size_t kNumClinicalBlocks = 5;
inline constexpr std::array<std::size_t, kNumClinicalBlocks> kClinicalBlockSizes{4, 8, 5, 14, 5};
inline constexpr std::array<std::size_t, kNumClinicalBlocks> kClinicalBlockOffsets{0, 4, 12, 17, 31};
inline constexpr std::size_t kClinicalDim = 36;

/// Fixed block order of the clinical vector.
enum class ClinicalBlock : std::size_t {
    BreastDensity = 0,
    MassShape = 1,
    MassMargins = 2,
    CalcificationType = 3,
    CalcificationDistribution = 4,
};

/// Key used for the block in vocabulary files and dataset headers.
std::string_view clinical_block_name(std::size_t block);

/// Ordered category names for each of the five clinical blocks. Only the
/// per-block cardinalities are fixed; names are configuration.
class ClinicalVocabulary {
public:
    using Blocks = std::array<std::vector<std::string>, kNumClinicalBlocks>;

    explicit ClinicalVocabulary(Blocks blocks);

    static ClinicalVocabulary defaults();
    /// Schema: {"breast_density": [...4], "mass_shape": [...8], "mass_margins": [...5],
    ///          "calcification_type": [...14], "calcification_distribution": [...5]}
    static ClinicalVocabulary from_json(std::string_view text);
    static ClinicalVocabulary load(const std::filesystem::path& path);
    std::string to_json() const;

    const std::vector<std::string>& categories(std::size_t block) const { return blocks_.at(block); }
    std::optional<std::size_t> index_of(std::size_t block, std::string_view name) const;

    bool operator==(const ClinicalVocabulary&) const = default;

private:
    Blocks blocks_;
};

/// One optional category per block; std::nullopt means missing.
struct ClinicalRecord {
    std::array<std::optional<std::string>, kNumClinicalBlocks> fields;

    std::optional<std::string>& operator[](ClinicalBlock b) { return fields[static_cast<std::size_t>(b)]; }
    const std::optional<std::string>& operator[](ClinicalBlock b) const {
        return fields[static_cast<std::size_t>(b)];
    }
    bool operator==(const ClinicalRecord&) const = default;
};

/// 36-d concatenation of five one-hot blocks; absent blocks are zero.
struct ClinicalVector {
    std::array<double, kClinicalDim> values{};
    std::array<bool, kNumClinicalBlocks> presence{};

    std::size_t present_blocks() const noexcept;
    bool operator==(const ClinicalVector&) const = default;
};

ClinicalVector encode(const ClinicalRecord& record, const ClinicalVocabulary& vocab);

/// Inverse of encode. Throws ContractError if a present block is not one-hot
/// or the presence flags disagree with the values.
ClinicalRecord decode(const ClinicalVector& vec, const ClinicalVocabulary& vocab);

/// Bait-and-switch masking: drops every block at once.
ClinicalVector mask_clinical(const ClinicalVector& vec, bool drop);

/// n independent Bernoulli(p) draws.
std::vector<bool> sample_drop_flags(std::size_t n, double p, Rng& rng);

} // namespace mmfusion
