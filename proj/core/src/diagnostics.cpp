#include "mmfusion/diagnostics.hpp"

#include "mmfusion/random.hpp"

#include <algorithm>

namespace mmfusion {

GradCheckResult check_model_gradients(const FusionConfig& config, std::uint64_t seed, std::size_t batch,
                                      double epsilon) {
    FusionModel model = FusionModel::initialize(config, seed);
    Rng rng = make_rng(seed, RngStream::GradCheck);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    // Non-zero biases so no unit starts exactly at a relu kink.
    for (auto& p : model.parameters()) {
        if (p.tensor.rank() == 1) {
            for (double& b : p.tensor.value) b = 0.1 * gauss(rng);
        }
    }

    struct Sample {
        std::vector<double> image;
        ClinicalVector clinical;
        std::size_t label;
    };
    std::vector<Sample> samples(batch);
    for (Sample& s : samples) {
        s.image.resize(config.image_dim);
        for (double& v : s.image) v = gauss(rng);
        for (std::size_t b = 0; b < kNumClinicalBlocks; ++b) {
            if (unit(rng) < 0.3) continue;
            const auto k = static_cast<std::size_t>(unit(rng) * static_cast<double>(kClinicalBlockSizes[b]));
            s.clinical.values[kClinicalBlockOffsets[b] + std::min(k, kClinicalBlockSizes[b] - 1)] = 1.0;
            s.clinical.presence[b] = true;
        }
        s.label = static_cast<std::size_t>(unit(rng) * static_cast<double>(config.num_classes)) % config.num_classes;
    }

    const double inv_batch = 1.0 / static_cast<double>(batch);
    ScalarFunction loss = [&](Tape& tape) -> const DiffTensor& {
        const DiffTensor* total = nullptr;
        for (const Sample& s : samples) {
            const ForwardPass pass = forward(tape, s.image, s.clinical, model);
            const DiffTensor& l = tape.softmax_cross_entropy(*pass.logits, s.label);
            total = total ? &tape.add(*total, l) : &l;
        }
        return tape.scale(*total, inv_batch);
    };
    const auto params = model.parameter_tensors();
    return gradient_check(loss, params, epsilon);
}

} // namespace mmfusion
