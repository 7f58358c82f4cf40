#pragma once

#include "mmfusion/fusion.hpp"
#include "mmfusion/gradcheck.hpp"

#include <cstddef>
#include <cstdint>

namespace mmfusion {

/// Small dimensions for finite-difference checks of a whole fusion model.
inline FusionConfig reduced_fusion_config(Variant variant) {
    FusionConfig cfg;
    cfg.variant = variant;
    cfg.image_dim = 32;
    cfg.proj_dim = 8;
    cfg.hidden_dim = 16;
    cfg.num_classes = 4;
    return cfg;
}

/// Random model and a random mini-batch (Gaussian embeddings, clinical
/// records with random missing blocks), all drawn from `seed`; checks the
/// mean cross-entropy gradient of every parameter.
GradCheckResult check_model_gradients(const FusionConfig& config, std::uint64_t seed, std::size_t batch = 1,
                                      double epsilon = 1e-5);

} // namespace mmfusion
