#include "mmfusion/gradcheck.hpp"

#include "mmfusion/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mmfusion {

namespace {

struct Evaluation {
    double loss;
    std::vector<bool> relu_pattern;
};

Evaluation evaluate(const ScalarFunction& f) {
    Tape tape;
    const DiffTensor& loss = f(tape);
    if (!loss.is_scalar()) {
        throw ContractError("gradient_check: function must return a scalar");
    }
    const double v = loss.value[0];
    if (!std::isfinite(v)) {
        throw NumericError("gradient_check: loss is not finite");
    }
    return {v, tape.relu_pattern()};
}

} // namespace

GradCheckResult gradient_check(const ScalarFunction& f, std::span<DiffTensor* const> params,
                               double epsilon) {
    if (!(epsilon > 0.0)) {
        throw ContractError("gradient_check: epsilon must be positive");
    }
    for (DiffTensor* p : params) p->zero_grad();
    {
        Tape tape;
        const DiffTensor& loss = f(tape);
        if (!std::isfinite(loss.value.at(0))) {
            throw NumericError("gradient_check: loss is not finite");
        }
        tape.backward(loss);
    }

    GradCheckResult result;
    for (std::size_t p = 0; p < params.size(); ++p) {
        DiffTensor& param = *params[p];
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double saved = param.value[i];
            param.value[i] = saved + epsilon;
            const Evaluation up = evaluate(f);
            param.value[i] = saved - epsilon;
            const Evaluation down = evaluate(f);
            param.value[i] = saved;

            if (up.relu_pattern != down.relu_pattern) {
                ++result.entries_skipped_at_kinks;
                continue;
            }
            const double numeric = (up.loss - down.loss) / (2.0 * epsilon);
            const double analytic = param.grad[i];
            const double err = std::abs(analytic - numeric) /
                               std::max(1e-8, std::abs(analytic) + std::abs(numeric));
            ++result.entries_checked;
            if (err > result.max_relative_error) {
                result.max_relative_error = err;
                result.worst_parameter = p;
                result.worst_index = i;
                result.analytic = analytic;
                result.numeric = numeric;
            }
        }
    }
    return result;
}

} // namespace mmfusion
