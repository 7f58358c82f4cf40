#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace mmfusion {

using Shape = std::vector<std::size_t>;

/// Which operation produced a tensor. Leaves are parameters, inputs or
/// constants created outside any recorded operation.
enum class OpKind : std::uint8_t {
    Leaf,
    Linear,
    Relu,
    Sigmoid,
    Hadamard,
    Concat,
    Softmax,
    SoftmaxCrossEntropy,
    Sum,
    Add,
    Scale,
};

std::string_view op_name(OpKind op);

/// Dense float64 array with a gradient buffer of identical shape.
///
/// `grad` is an accumulator: backward passes add into it and never touch
/// `value`, which is why it stays writable through a const reference. A model
/// handed out as const can therefore be run forward (and even differentiated)
/// without its parameter values ever changing.
struct DiffTensor {
    Shape shape;
    std::vector<double> value;
    mutable std::vector<double> grad;
    OpKind op = OpKind::Leaf;
    bool requires_grad = true;

    DiffTensor() = default;
    DiffTensor(Shape shape, std::vector<double> values, bool requires_grad = true);

    static DiffTensor zeros(Shape shape, bool requires_grad = true);
    static DiffTensor vector(std::vector<double> values, bool requires_grad = true);
    static DiffTensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                             bool requires_grad = true);

    std::size_t size() const noexcept { return value.size(); }
    std::size_t rank() const noexcept { return shape.size(); }
    bool is_scalar() const noexcept { return value.size() == 1; }
    void zero_grad() const;
};

/// Record-then-reverse computation graph.
///
/// Every operation allocates its output in tape-owned storage and appends a
/// backward rule. Outputs are returned by reference and stay valid until the
/// tape is cleared or destroyed. Inputs that live outside the tape (model
/// parameters) must outlive it.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Tape-owned leaf that never receives gradient.
    const DiffTensor& constant(std::vector<double> values);
    /// Tape-owned leaf that receives gradient.
    const DiffTensor& variable(std::vector<double> values);

    /// out = Wᵀ·x + b, with x[n], W[n×m] row-major, b[m].
    const DiffTensor& linear(const DiffTensor& x, const DiffTensor& W, const DiffTensor& b);
    const DiffTensor& relu(const DiffTensor& x);
    const DiffTensor& sigmoid(const DiffTensor& x);
    const DiffTensor& hadamard(const DiffTensor& a, const DiffTensor& b);
    const DiffTensor& concat(const DiffTensor& a, const DiffTensor& b);
    const DiffTensor& softmax(const DiffTensor& logits);
    /// Scalar −log softmax(logits)[target].
    const DiffTensor& softmax_cross_entropy(const DiffTensor& logits, std::size_t target);
    const DiffTensor& sum(const DiffTensor& x);
    const DiffTensor& add(const DiffTensor& a, const DiffTensor& b);
    const DiffTensor& scale(const DiffTensor& x, double factor);

    /// Seeds d(loss)/d(loss) = 1 and replays the recorded rules in reverse.
    /// Tape-owned intermediate gradients are reset first; gradients of
    /// external leaves accumulate across calls.
    void backward(const DiffTensor& loss);

    /// Sign pattern (input > 0) of every relu recorded so far, in order. Two
    /// evaluations with different patterns straddle a kink.
    std::vector<bool> relu_pattern() const;

    std::size_t num_operations() const noexcept { return ops_.size(); }
    std::span<const OpKind> operation_kinds() const noexcept { return kinds_; }
    bool owns(const DiffTensor& t) const noexcept;
    void clear();

private:
    struct Record {
        const DiffTensor* output;
        std::function<void()> backward;
    };

    DiffTensor& emit(OpKind op, Shape shape, bool requires_grad);
    void record(OpKind op, const DiffTensor& out, std::function<void()> rule);

    std::deque<DiffTensor> storage_;
    std::vector<Record> ops_;
    std::vector<OpKind> kinds_;
    std::vector<const DiffTensor*> relu_inputs_;
};

/// Numerically stable logistic function, shared by the tape and test oracles.
double stable_sigmoid(double x) noexcept;

/// Probability vector computed with the max-subtraction trick.
std::vector<double> softmax_values(std::span<const double> logits);

} // namespace mmfusion
