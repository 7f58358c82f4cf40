#include "mmfusion/metrics.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace mmfusion;

namespace {

struct Scores {
    std::vector<double> scores;
    std::vector<bool> labels;
};

Scores make_scores(std::size_t n) {
    std::mt19937_64 rng(n);
    std::uniform_real_distribution<double> u;
    Scores s;
    for (std::size_t i = 0; i < n; ++i) {
        const bool pos = u(rng) < 0.3;
        s.labels.push_back(pos);
        s.scores.push_back(u(rng) + (pos ? 0.2 : 0.0));
    }
    s.labels[0] = true;
    s.labels[1] = false;
    return s;
}

void BM_RocCurve(benchmark::State& state) {
    const Scores s = make_scores(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(roc_curve(s.scores, s.labels).auc);
    state.SetComplexityN(state.range(0));
}

void BM_PrCurve(benchmark::State& state) {
    const Scores s = make_scores(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(pr_curve(s.scores, s.labels).auc);
    state.SetComplexityN(state.range(0));
}

} // namespace

BENCHMARK(BM_RocCurve)->RangeMultiplier(4)->Range(64, 65536)->Complexity(benchmark::oNLogN);
BENCHMARK(BM_PrCurve)->RangeMultiplier(4)->Range(64, 65536)->Complexity(benchmark::oNLogN);
