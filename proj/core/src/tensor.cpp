#include "mmfusion/tensor.hpp"

#include "mmfusion/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mmfusion {

namespace {

std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_vector(const DiffTensor& t, const char* op) {
    if (t.rank() != 1) {
        throw DimensionError(std::string(op) + ": expected a vector, got shape " +
                             shape_to_string(t.shape));
    }
}

} // namespace

std::string_view op_name(OpKind op) {
    switch (op) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Linear: return "linear";
    case OpKind::Relu: return "relu";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Hadamard: return "hadamard";
    case OpKind::Concat: return "concat";
    case OpKind::Softmax: return "softmax";
    case OpKind::SoftmaxCrossEntropy: return "softmax_cross_entropy";
    case OpKind::Sum: return "sum";
    case OpKind::Add: return "add";
    case OpKind::Scale: return "scale";
    }
    return "unknown";
}

DiffTensor::DiffTensor(Shape s, std::vector<double> values, bool rg)
    : shape(std::move(s)), value(std::move(values)), grad(value.size(), 0.0), requires_grad(rg) {
    if (element_count(shape) != value.size()) {
        throw DimensionError("tensor shape " + shape_to_string(shape) + " does not hold " +
                             std::to_string(value.size()) + " values");
    }
}

DiffTensor DiffTensor::zeros(Shape shape, bool requires_grad) {
    const std::size_t n = element_count(shape);
    return DiffTensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

DiffTensor DiffTensor::vector(std::vector<double> values, bool requires_grad) {
    Shape shape{values.size()};
    return DiffTensor(std::move(shape), std::move(values), requires_grad);
}

DiffTensor DiffTensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                              bool requires_grad) {
    return DiffTensor(Shape{rows, cols}, std::move(values), requires_grad);
}

void DiffTensor::zero_grad() const { std::fill(grad.begin(), grad.end(), 0.0); }

double stable_sigmoid(double x) noexcept {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<double> softmax_values(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    if (logits.empty()) return out;
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (double& p : out) p /= total;
    return out;
}

DiffTensor& Tape::emit(OpKind op, Shape shape, bool requires_grad) {
    DiffTensor& out = storage_.emplace_back(DiffTensor::zeros(std::move(shape), requires_grad));
    out.op = op;
    return out;
}

void Tape::record(OpKind op, const DiffTensor& out, std::function<void()> rule) {
    kinds_.push_back(op);
    ops_.push_back(Record{&out, out.requires_grad ? std::move(rule) : nullptr});
}

const DiffTensor& Tape::constant(std::vector<double> values) {
    return storage_.emplace_back(DiffTensor::vector(std::move(values), false));
}

const DiffTensor& Tape::variable(std::vector<double> values) {
    return storage_.emplace_back(DiffTensor::vector(std::move(values), true));
}

const DiffTensor& Tape::linear(const DiffTensor& x, const DiffTensor& W, const DiffTensor& b) {
    if (x.rank() != 1 || W.rank() != 2 || b.rank() != 1 || W.shape[0] != x.size() ||
        W.shape[1] != b.size()) {
        throw DimensionError("linear: input " + shape_to_string(x.shape) + " incompatible with weight " +
                             shape_to_string(W.shape) + " and bias " + shape_to_string(b.shape));
    }
    const std::size_t n = W.shape[0];
    const std::size_t m = W.shape[1];
    DiffTensor& out = emit(OpKind::Linear, {m}, x.requires_grad || W.requires_grad || b.requires_grad);
    std::copy(b.value.begin(), b.value.end(), out.value.begin());
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x.value[i];
        if (xi == 0.0) continue;
        const double* row = W.value.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) out.value[j] += xi * row[j];
    }
    record(OpKind::Linear, out, [&x, &W, &b, &out, n, m] {
        const double* g = out.grad.data();
        if (b.requires_grad) {
            for (std::size_t j = 0; j < m; ++j) b.grad[j] += g[j];
        }
        if (W.requires_grad) {
            for (std::size_t i = 0; i < n; ++i) {
                const double xi = x.value[i];
                if (xi == 0.0) continue;
                double* row = W.grad.data() + i * m;
                for (std::size_t j = 0; j < m; ++j) row[j] += xi * g[j];
            }
        }
        if (x.requires_grad) {
            for (std::size_t i = 0; i < n; ++i) {
                const double* row = W.value.data() + i * m;
                double acc = 0.0;
                for (std::size_t j = 0; j < m; ++j) acc += row[j] * g[j];
                x.grad[i] += acc;
            }
        }
    });
    return out;
}

const DiffTensor& Tape::relu(const DiffTensor& x) {
    DiffTensor& out = emit(OpKind::Relu, x.shape, x.requires_grad);
    relu_inputs_.push_back(&x);
    for (std::size_t i = 0; i < x.size(); ++i) out.value[i] = x.value[i] > 0.0 ? x.value[i] : 0.0;
    record(OpKind::Relu, out, [&x, &out] {
        // Subgradient at exactly 0 is 0.
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x.value[i] > 0.0) x.grad[i] += out.grad[i];
        }
    });
    return out;
}

const DiffTensor& Tape::sigmoid(const DiffTensor& x) {
    DiffTensor& out = emit(OpKind::Sigmoid, x.shape, x.requires_grad);
    for (std::size_t i = 0; i < x.size(); ++i) out.value[i] = stable_sigmoid(x.value[i]);
    record(OpKind::Sigmoid, out, [&x, &out] {
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double y = out.value[i];
            x.grad[i] += y * (1.0 - y) * out.grad[i];
        }
    });
    return out;
}

const DiffTensor& Tape::hadamard(const DiffTensor& a, const DiffTensor& b) {
    if (a.shape != b.shape) {
        throw DimensionError("hadamard: shapes " + shape_to_string(a.shape) + " and " +
                             shape_to_string(b.shape) + " differ");
    }
    DiffTensor& out = emit(OpKind::Hadamard, a.shape, a.requires_grad || b.requires_grad);
    for (std::size_t i = 0; i < a.size(); ++i) out.value[i] = a.value[i] * b.value[i];
    record(OpKind::Hadamard, out, [&a, &b, &out] {
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double g = out.grad[i];
            if (a.requires_grad) a.grad[i] += g * b.value[i];
            if (b.requires_grad) b.grad[i] += g * a.value[i];
        }
    });
    return out;
}

const DiffTensor& Tape::concat(const DiffTensor& a, const DiffTensor& b) {
    require_vector(a, "concat");
    require_vector(b, "concat");
    const std::size_t n = a.size();
    DiffTensor& out = emit(OpKind::Concat, {n + b.size()}, a.requires_grad || b.requires_grad);
    std::copy(a.value.begin(), a.value.end(), out.value.begin());
    std::copy(b.value.begin(), b.value.end(), out.value.begin() + static_cast<std::ptrdiff_t>(n));
    record(OpKind::Concat, out, [&a, &b, &out, n] {
        if (a.requires_grad) {
            for (std::size_t i = 0; i < n; ++i) a.grad[i] += out.grad[i];
        }
        if (b.requires_grad) {
            for (std::size_t i = 0; i < b.size(); ++i) b.grad[i] += out.grad[n + i];
        }
    });
    return out;
}

const DiffTensor& Tape::softmax(const DiffTensor& logits) {
    require_vector(logits, "softmax");
    DiffTensor& out = emit(OpKind::Softmax, logits.shape, logits.requires_grad);
    out.value = softmax_values(logits.value);
    record(OpKind::Softmax, out, [&logits, &out] {
        double dot = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) dot += out.grad[i] * out.value[i];
        for (std::size_t i = 0; i < out.size(); ++i) {
            logits.grad[i] += out.value[i] * (out.grad[i] - dot);
        }
    });
    return out;
}

const DiffTensor& Tape::softmax_cross_entropy(const DiffTensor& logits, std::size_t target) {
    require_vector(logits, "softmax_cross_entropy");
    if (target >= logits.size()) {
        throw IndexError("softmax_cross_entropy: target " + std::to_string(target) +
                         " out of range for " + std::to_string(logits.size()) + " classes");
    }
    const double peak = *std::max_element(logits.value.begin(), logits.value.end());
    double total = 0.0;
    for (double z : logits.value) total += std::exp(z - peak);
    const double log_normalizer = peak + std::log(total);

    DiffTensor& out = emit(OpKind::SoftmaxCrossEntropy, {1}, logits.requires_grad);
    out.value[0] = log_normalizer - logits.value[target];
    record(OpKind::SoftmaxCrossEntropy, out, [&logits, &out, target, log_normalizer] {
        const double g = out.grad[0];
        for (std::size_t i = 0; i < logits.size(); ++i) {
            const double p = std::exp(logits.value[i] - log_normalizer);
            logits.grad[i] += g * (p - (i == target ? 1.0 : 0.0));
        }
    });
    return out;
}

const DiffTensor& Tape::sum(const DiffTensor& x) {
    DiffTensor& out = emit(OpKind::Sum, {1}, x.requires_grad);
    for (double v : x.value) out.value[0] += v;
    record(OpKind::Sum, out, [&x, &out] {
        for (double& g : x.grad) g += out.grad[0];
    });
    return out;
}

const DiffTensor& Tape::add(const DiffTensor& a, const DiffTensor& b) {
    if (a.shape != b.shape) {
        throw DimensionError("add: shapes " + shape_to_string(a.shape) + " and " +
                             shape_to_string(b.shape) + " differ");
    }
    DiffTensor& out = emit(OpKind::Add, a.shape, a.requires_grad || b.requires_grad);
    for (std::size_t i = 0; i < a.size(); ++i) out.value[i] = a.value[i] + b.value[i];
    record(OpKind::Add, out, [&a, &b, &out] {
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (a.requires_grad) a.grad[i] += out.grad[i];
            if (b.requires_grad) b.grad[i] += out.grad[i];
        }
    });
    return out;
}

const DiffTensor& Tape::scale(const DiffTensor& x, double factor) {
    DiffTensor& out = emit(OpKind::Scale, x.shape, x.requires_grad);
    for (std::size_t i = 0; i < x.size(); ++i) out.value[i] = factor * x.value[i];
    record(OpKind::Scale, out, [&x, &out, factor] {
        for (std::size_t i = 0; i < x.size(); ++i) x.grad[i] += factor * out.grad[i];
    });
    return out;
}

bool Tape::owns(const DiffTensor& t) const noexcept {
    return std::any_of(storage_.begin(), storage_.end(),
                       [&t](const DiffTensor& s) { return &s == &t; });
}

void Tape::backward(const DiffTensor& loss) {
    if (!loss.is_scalar()) {
        throw ContractError("backward: loss must be a scalar, got shape " +
                            shape_to_string(loss.shape));
    }
    if (!owns(loss) || loss.op == OpKind::Leaf) {
        throw ContractError("backward: loss was not produced by this tape");
    }
    for (const Record& r : ops_) r.output->zero_grad();
    loss.grad[0] = 1.0;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
        if (it->backward) it->backward();
    }
}

std::vector<bool> Tape::relu_pattern() const {
    std::vector<bool> out;
    for (const DiffTensor* x : relu_inputs_) {
        for (double v : x->value) out.push_back(v > 0.0);
    }
    return out;
}

void Tape::clear() {
    relu_inputs_.clear();
    ops_.clear();
    kinds_.clear();
    storage_.clear();
}

} // namespace mmfusion
