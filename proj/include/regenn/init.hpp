#pragma once

#include <cmath>

#include "regenn/rng.hpp"
#include "regenn/tensor.hpp"

namespace regenn {

inline Tensor uniform_tensor(Shape s, double lo, double hi, RngStream& rng) {
    Tensor t(s);
    for (auto& e : t.v) e = rng.next_uniform(lo, hi);
    return t;
}

/// Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
inline Tensor fan_in_init(Shape s, std::size_t fan_in, RngStream& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return uniform_tensor(s, -bound, bound, rng);
}

inline Tensor identity_matrix(std::size_t n) {
    Tensor t(Shape{n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

} // namespace regenn
