#include "mmfusion/fusion.hpp"
#include "mmfusion/trainer.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace mmfusion;

namespace {

FusionConfig full_size(Variant v) {
    FusionConfig cfg;
    cfg.variant = v;
    return cfg;
}

Example random_example(std::size_t image_dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Example ex;
    ex.image.resize(image_dim);
    for (double& x : ex.image) x = g(rng);
    ex.clinical.values[1] = 1.0;
    ex.clinical.presence[0] = true;
    ex.label = 2;
    return ex;
}

void BM_Forward(benchmark::State& state) {
    const auto v = static_cast<Variant>(state.range(0));
    const FusionModel model = FusionModel::initialize(full_size(v), 1);
    const Example ex = random_example(model.config().image_dim, 2);
    for (auto _ : state) {
        Tape tape;
        const auto pass = forward(tape, ex.image, ex.clinical, model);
        benchmark::DoNotOptimize(pass.probabilities->value.data());
    }
    state.SetLabel(std::string(variant_name(v)));
}

void BM_ForwardBackward(benchmark::State& state) {
    const auto v = static_cast<Variant>(state.range(0));
    FusionModel model = FusionModel::initialize(full_size(v), 1);
    const Example ex = random_example(model.config().image_dim, 2);
    for (auto _ : state) {
        model.zero_grad();
        Tape tape;
        const auto pass = forward(tape, ex.image, ex.clinical, model);
        tape.backward(tape.softmax_cross_entropy(*pass.logits, ex.label));
        benchmark::DoNotOptimize(model.parameters()[0].tensor.grad.data());
    }
    state.SetLabel(std::string(variant_name(v)));
}

void BM_AdamStep(benchmark::State& state) {
    FusionModel model = FusionModel::initialize(full_size(Variant::CrossAttention), 1);
    AdamState adam;
    for (auto& p : model.parameters()) std::fill(p.tensor.grad.begin(), p.tensor.grad.end(), 1e-3);
    for (auto _ : state) adam_step(model.parameters(), adam, 1e-5);
}

} // namespace

BENCHMARK(BM_Forward)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ForwardBackward)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AdamStep)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
