#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "omas/errors.hpp"

namespace omas {

using Shape = std::vector<size_t>;

inline size_t shape_numel(const Shape& s) {
    size_t n = 1;
    for (size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    out += "]";
    return out;
}

// Dense row-major tensor of doubles. Rank 0 (scalar), 1 (vector) and
// 2 (matrix) are the shapes the training code uses.
struct Tensor {
    Shape shape;
    std::vector<double> values;

    Tensor() = default;
    Tensor(Shape s, double fill = 0.0) : shape(std::move(s)), values(shape_numel(shape), fill) {}
    Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
        if (shape_numel(shape) != values.size())
            throw ShapeError("tensor: " + std::to_string(values.size()) +
                             " values do not fill shape " + shape_str(shape));
    }

    static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }
    static Tensor vec(std::vector<double> v) {
        Shape s{v.size()};
        return Tensor(std::move(s), std::move(v));
    }
    static Tensor matrix(size_t rows, size_t cols, std::vector<double> v) {
        return Tensor(Shape{rows, cols}, std::move(v));
    }

    size_t numel() const { return values.size(); }
    size_t rank() const { return shape.size(); }
    bool is_scalar() const { return shape.empty(); }

    size_t rows() const { return rank() == 2 ? shape[0] : (rank() == 1 ? shape[0] : 1); }
    size_t cols() const { return rank() == 2 ? shape[1] : 1; }

    double& at(size_t r, size_t c) { return values[r * shape[1] + c]; }
    double at(size_t r, size_t c) const { return values[r * shape[1] + c]; }

    double item() const {
        if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape));
        return values[0];
    }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

} // namespace omas
