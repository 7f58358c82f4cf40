#include "mmfusion/fusion.hpp"

#include "mmfusion/errors.hpp"
#include "mmfusion/random.hpp"

#include <algorithm>
#include <cmath>

namespace mmfusion {

namespace {

void expect_length(const DiffTensor& t, std::size_t n, const char* what) {
    if (t.rank() != 1 || t.size() != n) {
        throw DimensionError(std::string(what) + ": expected shape [" + std::to_string(n) + "], got " +
                             shape_to_string(t.shape));
    }
}

void check_gate_inputs(const DiffTensor& image, const DiffTensor& clinical, const DiffTensor& image_proj,
                       const DiffTensor& clinical_proj, const FusionModel& model, Variant expected,
                       const char* op) {
    const FusionConfig& cfg = model.config();
    if (cfg.variant != expected) {
        throw ContractError(std::string(op) + ": model variant is " + std::string(variant_name(cfg.variant)));
    }
    expect_length(image, cfg.image_dim, op);
    expect_length(clinical, cfg.clinical_dim, op);
    expect_length(image_proj, cfg.proj_dim, op);
    expect_length(clinical_proj, cfg.proj_dim, op);
}

GatedFusion apply_gates(Tape& tape, const DiffTensor& image_gate_in, const DiffTensor& clinical_gate_in,
                        const DiffTensor& image_proj, const DiffTensor& clinical_proj,
                        const FusionModel& model) {
    const DiffTensor& image_gate =
        tape.sigmoid(tape.linear(image_gate_in, model.image_gate_weight(), model.image_gate_bias()));
    const DiffTensor& clinical_gate = tape.sigmoid(
        tape.linear(clinical_gate_in, model.clinical_gate_weight(), model.clinical_gate_bias()));
    const DiffTensor& fused =
        tape.concat(tape.hadamard(image_gate, image_proj), tape.hadamard(clinical_gate, clinical_proj));
    return GatedFusion{&fused, &image_gate, &clinical_gate};
}

} // namespace

std::string_view variant_name(Variant v) {
    switch (v) {
    case Variant::Concat: return "concat";
    case Variant::CoAttention: return "co-attention";
    case Variant::CrossAttention: return "cross-attention";
    }
    return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) {
    if (name == "concat") return Variant::Concat;
    if (name == "co-attention" || name == "coattention") return Variant::CoAttention;
    if (name == "cross-attention" || name == "crossattention") return Variant::CrossAttention;
    return std::nullopt;
}

void FusionConfig::validate() const {
    if (image_dim == 0) throw ConfigError("image_dim must be positive");
    if (clinical_dim != kClinicalDim) {
        throw ConfigError("clinical_dim must equal the vocabulary total " + std::to_string(kClinicalDim));
    }
    if (proj_dim == 0) throw ConfigError("proj_dim must be positive");
    if (hidden_dim == 0) throw ConfigError("hidden_dim must be positive");
    if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
}

std::size_t FusionConfig::image_gate_inputs() const noexcept {
    switch (variant) {
    case Variant::Concat: return 0;
    case Variant::CoAttention: return gates_from_projected ? 2 * proj_dim : image_dim + clinical_dim;
    case Variant::CrossAttention: return gates_from_projected ? proj_dim : clinical_dim;
    }
    return 0;
}

std::size_t FusionConfig::clinical_gate_inputs() const noexcept {
    switch (variant) {
    case Variant::Concat: return 0;
    case Variant::CoAttention: return gates_from_projected ? 2 * proj_dim : image_dim + clinical_dim;
    case Variant::CrossAttention: return gates_from_projected ? proj_dim : image_dim;
    }
    return 0;
}

std::vector<std::pair<std::string, Shape>> FusionModel::layout(const FusionConfig& c) {
    c.validate();
    std::vector<std::pair<std::string, Shape>> out{
        {"image_projection.weight", {c.image_dim, c.proj_dim}},
        {"image_projection.bias", {c.proj_dim}},
        {"clinical_projection.weight", {c.clinical_dim, c.proj_dim}},
        {"clinical_projection.bias", {c.proj_dim}},
    };
    if (c.has_gates()) {
        out.push_back({"image_gate.weight", {c.image_gate_inputs(), c.proj_dim}});
        out.push_back({"image_gate.bias", {c.proj_dim}});
        out.push_back({"clinical_gate.weight", {c.clinical_gate_inputs(), c.proj_dim}});
        out.push_back({"clinical_gate.bias", {c.proj_dim}});
    }
    out.push_back({"hidden.weight", {2 * c.proj_dim, c.hidden_dim}});
    out.push_back({"hidden.bias", {c.hidden_dim}});
    out.push_back({"output.weight", {c.hidden_dim, c.num_classes}});
    out.push_back({"output.bias", {c.num_classes}});
    return out;
}

FusionModel::FusionModel(FusionConfig config, std::vector<Parameter> params)
    : config_(config), params_(std::move(params)) {}

FusionModel FusionModel::from_parameters(const FusionConfig& config, std::vector<Parameter> params) {
    const auto expected = layout(config);
    if (params.size() != expected.size()) {
        throw DimensionError("model for variant " + std::string(variant_name(config.variant)) + " needs " +
                             std::to_string(expected.size()) + " parameters, got " +
                             std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (params[i].name != expected[i].first || params[i].tensor.shape != expected[i].second) {
            throw DimensionError("parameter " + std::to_string(i) + " is '" + params[i].name + "' " +
                                 shape_to_string(params[i].tensor.shape) + ", expected '" +
                                 expected[i].first + "' " + shape_to_string(expected[i].second));
        }
        params[i].tensor.requires_grad = true;
        params[i].tensor.op = OpKind::Leaf;
        params[i].tensor.grad.assign(params[i].tensor.size(), 0.0);
    }
    return FusionModel(config, std::move(params));
}

FusionModel FusionModel::zeros(const FusionConfig& config) {
    std::vector<Parameter> params;
    for (auto& [name, shape] : layout(config)) params.push_back({name, DiffTensor::zeros(shape)});
    return FusionModel(config, std::move(params));
}

FusionModel FusionModel::initialize(const FusionConfig& config, std::uint64_t seed) {
    FusionModel model = zeros(config);
    Rng rng = make_rng(seed, RngStream::Init);
    for (Parameter& p : model.params_) {
        if (p.tensor.rank() != 2) continue;
        const double bound = 1.0 / std::sqrt(static_cast<double>(p.tensor.shape[0]));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& w : p.tensor.value) w = dist(rng);
    }
    return model;
}

std::vector<DiffTensor*> FusionModel::parameter_tensors() {
    std::vector<DiffTensor*> out;
    out.reserve(params_.size());
    for (Parameter& p : params_) out.push_back(&p.tensor);
    return out;
}

DiffTensor& FusionModel::parameter(std::string_view name) {
    return const_cast<DiffTensor&>(std::as_const(*this).parameter(name));
}

const DiffTensor& FusionModel::parameter(std::string_view name) const {
    for (const Parameter& p : params_) {
        if (p.name == name) return p.tensor;
    }
    throw ContractError("variant " + std::string(variant_name(config_.variant)) + " has no parameter '" +
                        std::string(name) + "'");
}

const DiffTensor& FusionModel::gate(std::size_t i) const {
    if (!config_.has_gates()) {
        throw ContractError("concat variant has no gate parameters");
    }
    return params_[4 + i].tensor;
}

void FusionModel::zero_grad() const {
    for (const Parameter& p : params_) p.tensor.zero_grad();
}

const DiffTensor& project_image(Tape& tape, const DiffTensor& image, const FusionModel& model) {
    expect_length(image, model.config().image_dim, "project_image");
    return tape.relu(tape.linear(image, model.image_projection_weight(), model.image_projection_bias()));
}

const DiffTensor& project_clinical(Tape& tape, const DiffTensor& clinical, const FusionModel& model) {
    expect_length(clinical, model.config().clinical_dim, "project_clinical");
    return tape.relu(
        tape.linear(clinical, model.clinical_projection_weight(), model.clinical_projection_bias()));
}

const DiffTensor& fuse_concat(Tape& tape, const DiffTensor& image_proj, const DiffTensor& clinical_proj) {
    if (image_proj.rank() != 1 || clinical_proj.shape != image_proj.shape) {
        throw DimensionError("fuse_concat: projected shapes " + shape_to_string(image_proj.shape) + " and " +
                             shape_to_string(clinical_proj.shape) + " must be equal-length vectors");
    }
    return tape.concat(image_proj, clinical_proj);
}

GatedFusion fuse_coattention(Tape& tape, const DiffTensor& image, const DiffTensor& clinical,
                             const DiffTensor& image_proj, const DiffTensor& clinical_proj,
                             const FusionModel& model) {
    check_gate_inputs(image, clinical, image_proj, clinical_proj, model, Variant::CoAttention,
                      "fuse_coattention");
    const DiffTensor& joint = model.config().gates_from_projected ? tape.concat(image_proj, clinical_proj)
                                                                  : tape.concat(image, clinical);
    return apply_gates(tape, joint, joint, image_proj, clinical_proj, model);
}

GatedFusion fuse_crossattention(Tape& tape, const DiffTensor& image, const DiffTensor& clinical,
                                const DiffTensor& image_proj, const DiffTensor& clinical_proj,
                                const FusionModel& model) {
    check_gate_inputs(image, clinical, image_proj, clinical_proj, model, Variant::CrossAttention,
                      "fuse_crossattention");
    if (model.config().gates_from_projected) {
        return apply_gates(tape, clinical_proj, image_proj, image_proj, clinical_proj, model);
    }
    return apply_gates(tape, clinical, image, image_proj, clinical_proj, model);
}

const DiffTensor& classifier_logits(Tape& tape, const DiffTensor& fused, const FusionModel& model) {
    expect_length(fused, 2 * model.config().proj_dim, "classify");
    const DiffTensor& hidden = tape.relu(tape.linear(fused, model.hidden_weight(), model.hidden_bias()));
    return tape.linear(hidden, model.output_weight(), model.output_bias());
}

const DiffTensor& classify(Tape& tape, const DiffTensor& fused, const FusionModel& model) {
    return tape.softmax(classifier_logits(tape, fused, model));
}

ForwardPass forward(Tape& tape, std::span<const double> image, const ClinicalVector& clinical,
                    const FusionModel& model) {
    const FusionConfig& cfg = model.config();
    if (image.size() != cfg.image_dim) {
        throw DimensionError("forward: image embedding has " + std::to_string(image.size()) +
                             " values, model expects " + std::to_string(cfg.image_dim));
    }
    const DiffTensor& e = tape.constant(std::vector<double>(image.begin(), image.end()));
    const DiffTensor& c = tape.constant(std::vector<double>(clinical.values.begin(), clinical.values.end()));

    ForwardPass pass;
    pass.image_projection = &project_image(tape, e, model);
    pass.clinical_projection = &project_clinical(tape, c, model);
    switch (cfg.variant) {
    case Variant::Concat:
        pass.fused = &fuse_concat(tape, *pass.image_projection, *pass.clinical_projection);
        break;
    case Variant::CoAttention:
    case Variant::CrossAttention: {
        const GatedFusion g =
            cfg.variant == Variant::CoAttention
                ? fuse_coattention(tape, e, c, *pass.image_projection, *pass.clinical_projection, model)
                : fuse_crossattention(tape, e, c, *pass.image_projection, *pass.clinical_projection, model);
        pass.fused = g.fused;
        pass.image_gate = g.image_gate;
        pass.clinical_gate = g.clinical_gate;
        break;
    }
    }
    pass.logits = &classifier_logits(tape, *pass.fused, model);
    pass.probabilities = &tape.softmax(*pass.logits);
    return pass;
}

std::vector<double> predict_proba(const FusionModel& model, std::span<const double> image,
                                  const ClinicalVector& clinical) {
    Tape tape;
    return forward(tape, image, clinical, model).probabilities->value;
}

} // namespace mmfusion
