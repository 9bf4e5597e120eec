#include "regenn/gradcheck.hpp"

#include <cmath>

#include "regenn/errors.hpp"

namespace regenn {

namespace {
double eval_forward(const TapeFn& f, const Tensor& theta) {
    Tape tape;
    Var t = tape.leaf(theta, false);
    Var loss = f(tape, t);
    return tape.value(loss).scalar_value();
}
} // namespace

GradCheckResult finite_difference_check(const TapeFn& f, const Tensor& theta, double step) {
    Tape tape;
    Var t = tape.leaf(theta, true);
    Var loss = f(tape, t);
    tape.backward(loss);
    const Tensor analytic = tape.grad_or_zero(t);

    GradCheckResult res;
    res.coords = theta.numel();
    Tensor probe = theta;
    for (std::size_t i = 0; i < theta.numel(); ++i) {
        const double saved = probe.v[i];
        probe.v[i] = saved + step;
        const double fp = eval_forward(f, probe);
        probe.v[i] = saved - step;
        const double fm = eval_forward(f, probe);
        probe.v[i] = saved;
        const double numeric = (fp - fm) / (2.0 * step);
        const double rel =
            std::fabs(analytic.v[i] - numeric) / std::max(1.0, std::fabs(numeric));
        res.max_rel_error = std::max(res.max_rel_error, rel);
    }
    return res;
}

} // namespace regenn
