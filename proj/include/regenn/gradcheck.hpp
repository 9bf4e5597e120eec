#pragma once

#include <functional>

#include "regenn/tape.hpp"

namespace regenn {

/// A scalar function expressed as a tape program over one parameter tensor.
/// The callable must build and return a scalar loss node from `theta`.
using TapeFn = std::function<Var(Tape&, Var theta)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t coords = 0;
};

/// Compares the tape's analytic gradient of f at `theta` against central
/// finite differences with step h. Returns the max over coordinates of
/// |analytic - numeric| / max(1, |numeric|). The numeric side re-evaluates f
/// forward-only and never touches the backward pass it is checking.
GradCheckResult finite_difference_check(const TapeFn& f, const Tensor& theta,
                                        double step = 1e-6);

} // namespace regenn
