#include "relmatch/grad_check.hpp"

#include <cmath>
#include <vector>

#include "relmatch/errors.hpp"

namespace relmatch {

GradCheckReport grad_check(const std::function<double(bool with_grad)>& fn,
                           std::span<Param* const> params, double eps) {
    if (!(eps > 0.0) || eps > 1e-2) {
        throw ParameterError("grad_check: eps must be in (0, 1e-2], got " + std::to_string(eps));
    }

    for (Param* p : params) p->reset_grad();
    fn(true);
    std::vector<Matrix> analytic;
    analytic.reserve(params.size());
    for (Param* p : params) analytic.push_back(p->grad);

    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Param& p = *params[pi];
        for (int r = 0; r < p.value.rows(); ++r) {
            for (int c = 0; c < p.value.cols(); ++c) {
                const double saved = p.value(r, c);
                p.value(r, c) = saved + eps;
                const double f_plus = fn(false);
                p.value(r, c) = saved - eps;
                const double f_minus = fn(false);
                p.value(r, c) = saved;

                const double numeric = (f_plus - f_minus) / (2.0 * eps);
                const double a = analytic[pi](r, c);
                const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
                const double rel = std::fabs(a - numeric) / denom;
                if (rel > report.max_rel_error) {
                    report.max_rel_error = rel;
                    report.param = p.name;
                    report.row = r;
                    report.col = c;
                    report.analytic = a;
                    report.numeric = numeric;
                }
            }
        }
    }
    return report;
}

}  // namespace relmatch
