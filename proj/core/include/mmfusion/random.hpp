#pragma once

#include <cstdint>
#include <random>

namespace mmfusion {

using Rng = std::mt19937_64;

/// Independent streams from one experiment seed, so that e.g. drawing mask
/// flags never perturbs the shuffle order.
enum class RngStream : std::uint32_t {
    Init = 1,
    Split = 2,
    Shuffle = 3,
    TrainMask = 4,
    ValidationMask = 5,
    EvalMask = 6,
    Synth = 7,
    GradCheck = 8,
};

inline Rng make_rng(std::uint64_t seed, RngStream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return Rng(seq);
}

} // namespace mmfusion
