#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace regenn {

/// Extents of a dense tensor of rank 0 (scalar) up to rank 3.
class Shape {
public:
    Shape() : ext_{1, 1, 1}, rank_(0) {}
    explicit Shape(std::size_t a) : ext_{a, 1, 1}, rank_(1) {}
    Shape(std::size_t a, std::size_t b) : ext_{a, b, 1}, rank_(2) {}
    Shape(std::size_t a, std::size_t b, std::size_t c) : ext_{a, b, c}, rank_(3) {}

    std::size_t rank() const { return rank_; }
    std::size_t extent(std::size_t axis) const { return ext_[axis]; }
    std::size_t numel() const { return ext_[0] * ext_[1] * ext_[2]; }
    /// Extent of the last axis (1 for scalars).
    std::size_t last() const { return rank_ == 0 ? 1 : ext_[rank_ - 1]; }

    bool operator==(const Shape& o) const {
        return rank_ == o.rank_ && ext_ == o.ext_;
    }
    bool operator!=(const Shape& o) const { return !(*this == o); }

    std::string to_string() const;

private:
    std::array<std::size_t, 3> ext_;
    std::size_t rank_;
};

/// Dense row-major float64 tensor. A plain value type: copying copies the
/// data, and every operation produces a fresh tensor.
struct Tensor {
    Shape shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(Shape s) : shape(s), v(s.numel(), 0.0) {}
    Tensor(Shape s, std::vector<double> data);

    static Tensor scalar(double x);
    static Tensor full(Shape s, double x);
    /// Builds a rank-2 tensor from row lists, e.g. {{1,2},{3,4}}.
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor vector(std::initializer_list<double> xs);

    std::size_t numel() const { return v.size(); }

    double& at(std::size_t i) { return v[i]; }
    double at(std::size_t i) const { return v[i]; }
    double& at(std::size_t i, std::size_t j) { return v[i * shape.extent(1) + j]; }
    double at(std::size_t i, std::size_t j) const { return v[i * shape.extent(1) + j]; }
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return v[(i * shape.extent(1) + j) * shape.extent(2) + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return v[(i * shape.extent(1) + j) * shape.extent(2) + k];
    }

    double scalar_value() const { return v[0]; }

    bool all_finite() const;
    /// Largest absolute element-wise difference; shapes must match.
    double max_abs_diff(const Tensor& o) const;
    bool same_values(const Tensor& o) const;
};

} // namespace regenn
