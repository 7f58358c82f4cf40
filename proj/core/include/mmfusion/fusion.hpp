#pragma once

#include "mmfusion/clinical.hpp"
#include "mmfusion/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mmfusion {

enum class Variant : std::uint8_t {
    Concat = 0,
    CoAttention = 1,
    CrossAttention = 2,
};

/// "concat", "co-attention", "cross-attention".
std::string_view variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view name);

struct FusionConfig {
    Variant variant = Variant::Concat;
    std::size_t image_dim = 2048;
    std::size_t clinical_dim = kClinicalDim;
    std::size_t proj_dim = 100;
    std::size_t hidden_dim = 200;
    std::size_t num_classes = 4;
    // Off: gates read the raw embeddings and scale the projected ones.
    // On: gates read the projected embeddings instead.
    bool gates_from_projected = false;

    void validate() const;
    bool has_gates() const noexcept { return variant != Variant::Concat; }
    std::size_t image_gate_inputs() const noexcept;
    std::size_t clinical_gate_inputs() const noexcept;
    bool operator==(const FusionConfig&) const = default;
};

/// Parameters of one fusion network, in declared order:
/// image/clinical projections, gates (attention variants only), hidden and
/// output layers of the classifier. Weight matrices are [inputs × outputs].
class FusionModel {
public:
    struct Parameter {
        std::string name;
        DiffTensor tensor;
    };

    /// Weights uniform in ±1/√fan_in, biases zero.
    static FusionModel initialize(const FusionConfig& config, std::uint64_t seed);
    static FusionModel zeros(const FusionConfig& config);

    const FusionConfig& config() const noexcept { return config_; }

    std::span<Parameter> parameters() noexcept { return params_; }
    std::span<const Parameter> parameters() const noexcept { return params_; }
    std::vector<DiffTensor*> parameter_tensors();

    /// Throws ContractError for a name this variant does not have.
    DiffTensor& parameter(std::string_view name);
    const DiffTensor& parameter(std::string_view name) const;

    const DiffTensor& image_projection_weight() const { return params_[0].tensor; }
    const DiffTensor& image_projection_bias() const { return params_[1].tensor; }
    const DiffTensor& clinical_projection_weight() const { return params_[2].tensor; }
    const DiffTensor& clinical_projection_bias() const { return params_[3].tensor; }
    const DiffTensor& image_gate_weight() const { return gate(0); }
    const DiffTensor& image_gate_bias() const { return gate(1); }
    const DiffTensor& clinical_gate_weight() const { return gate(2); }
    const DiffTensor& clinical_gate_bias() const { return gate(3); }
    const DiffTensor& hidden_weight() const { return params_[classifier_offset()].tensor; }
    const DiffTensor& hidden_bias() const { return params_[classifier_offset() + 1].tensor; }
    const DiffTensor& output_weight() const { return params_[classifier_offset() + 2].tensor; }
    const DiffTensor& output_bias() const { return params_[classifier_offset() + 3].tensor; }

    void zero_grad() const;

    /// Expected shapes in declared order, derived from the config alone.
    static std::vector<std::pair<std::string, Shape>> layout(const FusionConfig& config);
    /// Assembles a model from tensors in declared order, checking every shape.
    static FusionModel from_parameters(const FusionConfig& config, std::vector<Parameter> params);

private:
    FusionModel(FusionConfig config, std::vector<Parameter> params);
    const DiffTensor& gate(std::size_t i) const;
    std::size_t classifier_offset() const noexcept { return config_.has_gates() ? 8 : 4; }

    FusionConfig config_;
    std::vector<Parameter> params_;
};

const DiffTensor& project_image(Tape& tape, const DiffTensor& image, const FusionModel& model);
const DiffTensor& project_clinical(Tape& tape, const DiffTensor& clinical, const FusionModel& model);

/// Image half first.
const DiffTensor& fuse_concat(Tape& tape, const DiffTensor& image_proj, const DiffTensor& clinical_proj);

struct GatedFusion {
    const DiffTensor* fused;
    const DiffTensor* image_gate;
    const DiffTensor* clinical_gate;
};

/// Both gates read concat(image, clinical); each scales its own projection.
GatedFusion fuse_coattention(Tape& tape, const DiffTensor& image, const DiffTensor& clinical,
                             const DiffTensor& image_proj, const DiffTensor& clinical_proj,
                             const FusionModel& model);

/// Each gate reads only the other modality.
GatedFusion fuse_crossattention(Tape& tape, const DiffTensor& image, const DiffTensor& clinical,
                                const DiffTensor& image_proj, const DiffTensor& clinical_proj,
                                const FusionModel& model);

/// output(relu(hidden(fused))); pre-softmax scores.
const DiffTensor& classifier_logits(Tape& tape, const DiffTensor& fused, const FusionModel& model);
/// Softmax of classifier_logits.
const DiffTensor& classify(Tape& tape, const DiffTensor& fused, const FusionModel& model);

struct ForwardPass {
    const DiffTensor* image_projection = nullptr;
    const DiffTensor* clinical_projection = nullptr;
    const DiffTensor* image_gate = nullptr;
    const DiffTensor* clinical_gate = nullptr;
    const DiffTensor* fused = nullptr;
    const DiffTensor* logits = nullptr;
    const DiffTensor* probabilities = nullptr;
};

/// project → fuse → classify for the model's variant, recorded on `tape`.
ForwardPass forward(Tape& tape, std::span<const double> image, const ClinicalVector& clinical,
                    const FusionModel& model);

std::vector<double> predict_proba(const FusionModel& model, std::span<const double> image,
                                  const ClinicalVector& clinical);

} // namespace mmfusion
