#pragma once

#include "mmfusion/clinical.hpp"
#include "mmfusion/fusion.hpp"
#include "mmfusion/metrics.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mmfusion {

/// One training/evaluation sample with its clinical record already encoded.
struct Example {
    std::vector<double> image;
    ClinicalVector clinical;
    std::size_t label = 0;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t step = 0;
};

/// One bias-corrected Adam update from the gradients stored in each tensor.
/// An empty state is sized on first use. Nothing is modified if any gradient
/// is non-finite (NumericError names the parameter).
void adam_step(std::span<FusionModel::Parameter> params, AdamState& state, double learning_rate,
               const AdamConfig& adam = {});

struct TrainConfig {
    std::array<double, 3> stage_learning_rates{1e-3, 1e-4, 1e-5};
    std::array<std::size_t, 3> epochs_per_stage{20, 10, 10};
    std::size_t batch_size = 32;
    /// Probability that a sample's clinical vector is zeroed (bait-and-switch).
    double mask_probability = 0.0;
    /// When false no drop flags are drawn at all.
    bool bait_and_switch = true;
    std::uint64_t seed = 0;
    AdamConfig adam;
    double validation_fraction = 0.25;

    void validate() const;
    std::size_t total_epochs() const noexcept;
    /// Stage (0-based) that owns a 0-based epoch index.
    std::size_t stage_of_epoch(std::size_t epoch) const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    std::size_t stage = 0;
    double learning_rate = 0.0;
    double train_loss = 0.0;
    /// NaN when there is no validation split.
    double validation_loss = 0.0;
    /// NaN when the validation split lacks a class.
    double validation_macro_auc_roc = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;

    /// {"epochs": [{"epoch":…, "stage":…, …}, …]}; NaN is written as null.
    std::string to_json() const;
};

struct TrainHooks {
    std::function<void(const EpochRecord&)> on_epoch;
    /// Called before every optimizer step with (epoch, batch, learning rate).
    std::function<void(std::size_t, std::size_t, double)> on_step;
};

struct TrainResult {
    FusionModel model;
    TrainHistory history;
};

/// Three-stage Adam training with per-batch bait-and-switch masking. The
/// dataset is split (seeded) into train/validation first. Every random choice
/// derives from config.seed, so identical inputs give identical parameters.
TrainResult train(std::span<const Example> dataset, const FusionConfig& model_config, const TrainConfig& config,
                  const TrainHooks& hooks = {});

/// Mean softmax cross-entropy of `model` over `data`.
double mean_loss(const FusionModel& model, std::span<const Example> data);

std::vector<ScoredSample> score(const FusionModel& model, std::span<const Example> data);

/// Masks the clinical inputs once with Bernoulli(p) flags drawn from `seed`,
/// then scores and reports one-vs-rest curves.
EvalReport evaluate_masked(const FusionModel& model, std::span<const Example> data, double p, std::uint64_t seed,
                           const std::vector<std::string>& class_names);

} // namespace mmfusion
