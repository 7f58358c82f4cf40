#include "mmfusion/trainer.hpp"

#include "mmfusion/errors.hpp"
#include "mmfusion/io.hpp"
#include "mmfusion/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mmfusion {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<Example> masked_copy(std::span<const Example> data, const std::vector<bool>& drop) {
    std::vector<Example> out(data.begin(), data.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i].clinical = mask_clinical(out[i].clinical, drop[i]);
    return out;
}

void check_labels(std::span<const Example> data, std::size_t num_classes) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i].label >= num_classes) {
            throw IndexError("sample " + std::to_string(i) + " has label " + std::to_string(data[i].label) +
                             " but the model has " + std::to_string(num_classes) + " classes");
        }
    }
}

double validation_auc(const FusionModel& model, std::span<const Example> data) {
    std::vector<std::string> names(model.config().num_classes);
    for (std::size_t i = 0; i < names.size(); ++i) names[i] = "class" + std::to_string(i);
    try {
        return one_vs_rest_report(score(model, data), names).macro_auc_roc;
    } catch (const DegenerateInputError&) {
        return kNaN;
    }
}

} // namespace

void adam_step(std::span<FusionModel::Parameter> params, AdamState& state, double learning_rate,
               const AdamConfig& adam) {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (state.m.empty() && state.v.empty()) {
        for (const auto& p : params) {
            state.m.emplace_back(p.tensor.size(), 0.0);
            state.v.emplace_back(p.tensor.size(), 0.0);
        }
    }
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw DimensionError("Adam state tracks " + std::to_string(state.m.size()) + " parameters, got " +
                             std::to_string(params.size()));
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto& p = params[k];
        if (state.m[k].size() != p.tensor.size() || state.v[k].size() != p.tensor.size()) {
            throw DimensionError("Adam state shape differs for parameter '" + p.name + "'");
        }
        for (double g : p.tensor.grad) {
            if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter '" + p.name + "'");
        }
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double m_correction = 1.0 - std::pow(adam.beta1, t);
    const double v_correction = 1.0 - std::pow(adam.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        DiffTensor& theta = params[k].tensor;
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double g = theta.grad[i];
            m[i] = adam.beta1 * m[i] + (1.0 - adam.beta1) * g;
            v[i] = adam.beta2 * v[i] + (1.0 - adam.beta2) * g * g;
            const double m_hat = m[i] / m_correction;
            const double v_hat = v[i] / v_correction;
            theta.value[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + adam.epsilon);
        }
    }
}

void TrainConfig::validate() const {
    for (std::size_t s = 0; s < stage_learning_rates.size(); ++s) {
        if (!(stage_learning_rates[s] > 0.0)) throw ConfigError("stage learning rates must be positive");
        if (s > 0 && stage_learning_rates[s] > stage_learning_rates[s - 1]) {
            throw ConfigError("stage learning rates must be non-increasing");
        }
    }
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (!(mask_probability >= 0.0 && mask_probability <= 1.0)) {
        throw ConfigError("mask_probability must lie in [0, 1]");
    }
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw ConfigError("validation_fraction must lie in [0, 1)");
    }
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.epsilon > 0.0)) {
        throw ConfigError("Adam requires 0 <= beta < 1 and epsilon > 0");
    }
}

std::size_t TrainConfig::total_epochs() const noexcept {
    return std::accumulate(epochs_per_stage.begin(), epochs_per_stage.end(), std::size_t{0});
}

std::size_t TrainConfig::stage_of_epoch(std::size_t epoch) const {
    std::size_t end = 0;
    for (std::size_t s = 0; s < epochs_per_stage.size(); ++s) {
        end += epochs_per_stage[s];
        if (epoch < end) return s;
    }
    throw IndexError("epoch " + std::to_string(epoch) + " is past the last stage");
}

std::string TrainHistory::to_json() const {
    using nlohmann::ordered_json;
    auto num = [](double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); };
    ordered_json doc;
    doc["epochs"] = ordered_json::array();
    for (const EpochRecord& r : epochs) {
        ordered_json e;
        e["epoch"] = r.epoch;
        e["stage"] = r.stage;
        e["learning_rate"] = r.learning_rate;
        e["train_loss"] = num(r.train_loss);
        e["validation_loss"] = num(r.validation_loss);
        e["validation_macro_auc_roc"] = num(r.validation_macro_auc_roc);
        doc["epochs"].push_back(std::move(e));
    }
    return doc.dump(2) + "\n";
}

double mean_loss(const FusionModel& model, std::span<const Example> data) {
    if (data.empty()) return kNaN;
    double total = 0.0;
    Tape tape;
    for (const Example& ex : data) {
        tape.clear();
        const ForwardPass pass = forward(tape, ex.image, ex.clinical, model);
        total += tape.softmax_cross_entropy(*pass.logits, ex.label).value[0];
    }
    return total / static_cast<double>(data.size());
}

std::vector<ScoredSample> score(const FusionModel& model, std::span<const Example> data) {
    std::vector<ScoredSample> out;
    out.reserve(data.size());
    Tape tape;
    for (const Example& ex : data) {
        tape.clear();
        out.push_back({ex.label, forward(tape, ex.image, ex.clinical, model).probabilities->value});
    }
    return out;
}

TrainResult train(std::span<const Example> dataset, const FusionConfig& model_config, const TrainConfig& config,
                  const TrainHooks& hooks) {
    model_config.validate();
    config.validate();
    if (dataset.empty()) throw ConfigError("training dataset is empty");
    check_labels(dataset, model_config.num_classes);

    // Seeded train/validation split.
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng split_rng = make_rng(config.seed, RngStream::Split);
    std::shuffle(order.begin(), order.end(), split_rng);
    auto n_val = static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(dataset.size())));
    n_val = std::min(n_val, dataset.size() - 1);

    std::vector<Example> validation;
    for (std::size_t i = 0; i < n_val; ++i) validation.push_back(dataset[order[i]]);
    std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(train_idx.begin(), train_idx.end());

    if (config.bait_and_switch && !validation.empty()) {
        Rng val_rng = make_rng(config.seed, RngStream::ValidationMask);
        validation = masked_copy(validation, sample_drop_flags(validation.size(), config.mask_probability, val_rng));
    }

    TrainResult result{FusionModel::initialize(model_config, config.seed), {}};
    FusionModel& model = result.model;
    AdamState adam_state;
    Rng shuffle_rng = make_rng(config.seed, RngStream::Shuffle);
    Rng mask_rng = make_rng(config.seed, RngStream::TrainMask);
    Tape tape;

    const std::size_t epochs = config.total_epochs();
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        const std::size_t stage = config.stage_of_epoch(epoch);
        const double lr = config.stage_learning_rates[stage];
        std::shuffle(train_idx.begin(), train_idx.end(), shuffle_rng);

        double epoch_loss = 0.0;
        std::size_t batch = 0;
        for (std::size_t start = 0; start < train_idx.size(); start += config.batch_size, ++batch) {
            const std::size_t end = std::min(start + config.batch_size, train_idx.size());
            const std::size_t n = end - start;
            std::vector<bool> drop(n, false);
            if (config.bait_and_switch) drop = sample_drop_flags(n, config.mask_probability, mask_rng);

            model.zero_grad();
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j) {
                const Example& ex = dataset[train_idx[start + j]];
                tape.clear();
                const ClinicalVector clinical = mask_clinical(ex.clinical, drop[j]);
                const ForwardPass pass = forward(tape, ex.image, clinical, model);
                const DiffTensor& loss = tape.softmax_cross_entropy(*pass.logits, ex.label);
                if (!std::isfinite(loss.value[0])) {
                    throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(batch));
                }
                epoch_loss += loss.value[0];
                tape.backward(tape.scale(loss, inv_n));
            }
            if (hooks.on_step) hooks.on_step(epoch, batch, lr);
            adam_step(model.parameters(), adam_state, lr, config.adam);
        }

        EpochRecord record;
        record.epoch = epoch;
        record.stage = stage;
        record.learning_rate = lr;
        record.train_loss = epoch_loss / static_cast<double>(train_idx.size());
        record.validation_loss = validation.empty() ? kNaN : mean_loss(model, validation);
        record.validation_macro_auc_roc = validation.empty() ? kNaN : validation_auc(model, validation);
        result.history.epochs.push_back(record);
        if (hooks.on_epoch) hooks.on_epoch(record);
    }
    return result;
}

EvalReport evaluate_masked(const FusionModel& model, std::span<const Example> data, double p, std::uint64_t seed,
                           const std::vector<std::string>& class_names) {
    if (class_names.size() != model.config().num_classes) {
        throw ConfigError("model has " + std::to_string(model.config().num_classes) + " classes but " +
                          std::to_string(class_names.size()) + " class names were given");
    }
    check_labels(data, class_names.size());
    Rng rng = make_rng(seed, RngStream::EvalMask);
    const auto masked = masked_copy(data, sample_drop_flags(data.size(), p, rng));
    return one_vs_rest_report(score(model, masked), class_names);
}

} // namespace mmfusion
