#pragma once

#include <functional>
#include <span>
#include <string>

#include "relmatch/tape.hpp"

namespace relmatch {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string param;  // offending coordinate
    int row = -1;
    int col = -1;
    double analytic = 0.0;
    double numeric = 0.0;
    bool ok(double tol) const { return max_rel_error <= tol; }
};

/// Compares analytic gradients against central finite differences, coordinate by
/// coordinate. fn(true) must evaluate the scalar at the current param values and
/// leave d(out)/d(param) in each Param::grad; fn(false) must only return the value.
/// Relative error uses denominator max(|analytic|, |numeric|, 1e-8).
/// eps must lie in (0, 1e-2].
GradCheckReport grad_check(const std::function<double(bool with_grad)>& fn,
                           std::span<Param* const> params, double eps);

}  // namespace relmatch
