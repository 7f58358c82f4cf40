#pragma once

#include "mmfusion/tensor.hpp"

#include <cstddef>
#include <functional>
#include <span>

namespace mmfusion {

/// Builds a scalar loss on the given tape from externally owned parameters.
using ScalarFunction = std::function<const DiffTensor&(Tape&)>;

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t worst_parameter = 0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t entries_checked = 0;
    /// Entries whose ±epsilon evaluations took different relu branches; the
    /// central difference is not a derivative estimate there.
    std::size_t entries_skipped_at_kinks = 0;
};

/// Compares backward() against central differences for every entry of every
/// parameter. Relative error per entry is
/// |analytic − numeric| / max(1e-8, |analytic| + |numeric|).
/// Entries whose perturbation crosses a relu kink are skipped and counted.
/// Parameter values are restored bitwise; their grads are left holding the
/// analytic gradient.
GradCheckResult gradient_check(const ScalarFunction& f, std::span<DiffTensor* const> params,
                               double epsilon = 1e-5);

} // namespace mmfusion
