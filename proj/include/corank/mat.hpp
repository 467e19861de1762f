#pragma once

#include <cstddef>
#include <vector>

#include "corank/common.hpp"

namespace corank {

// Row-major dense matrix of doubles. Deliberately minimal; the heavy lifting
// happens in the kernels layer on raw pointers.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double init = 0.0) : rows(r), cols(c), v(r * c, init) {}

    double* data() { return v.data(); }
    const double* data() const { return v.data(); }

    double& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }

    double* row(std::size_t r) { return v.data() + r * cols; }
    const double* row(std::size_t r) const { return v.data() + r * cols; }

    std::size_t size() const { return v.size(); }
    void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

using Vec = std::vector<double>;

}  // namespace corank
