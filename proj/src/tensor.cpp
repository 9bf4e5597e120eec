#include "regenn/tensor.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "regenn/errors.hpp"

namespace regenn {

std::string Shape::to_string() const {
    if (rank_ == 0) return "scalar";
    std::ostringstream os;
    for (std::size_t i = 0; i < rank_; ++i) {
        if (i) os << 'x';
        os << ext_[i];
    }
    return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> data) : shape(s), v(std::move(data)) {
    if (v.size() != shape.numel()) {
        throw ShapeError("tensor data size " + std::to_string(v.size()) +
                         " does not match shape " + shape.to_string());
    }
}

Tensor Tensor::scalar(double x) {
    Tensor t{Shape{}};
    t.v[0] = x;
    return t;
}

Tensor Tensor::full(Shape s, double x) {
    Tensor t{s};
    std::fill(t.v.begin(), t.v.end(), x);
    return t;
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Tensor t{Shape{r, c}};
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("ragged matrix initializer");
        for (double x : row) t.v[i++] = x;
    }
    return t;
}

Tensor Tensor::vector(std::initializer_list<double> xs) {
    Tensor t{Shape{xs.size()}};
    std::size_t i = 0;
    for (double x : xs) t.v[i++] = x;
    return t;
}

bool Tensor::all_finite() const {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

double Tensor::max_abs_diff(const Tensor& o) const {
    if (shape != o.shape) {
        throw ShapeError("max_abs_diff: shape " + shape.to_string() + " vs " +
                         o.shape.to_string());
    }
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        m = std::max(m, std::fabs(v[i] - o.v[i]));
    }
    return m;
}

bool Tensor::same_values(const Tensor& o) const {
    return shape == o.shape && v == o.v;
}

} // namespace regenn
