#include <algorithm>
#include <cmath>

#include "corank/kernels.hpp"

// Reference kernels. Plain loops, no contraction (see -ffp-contract in the
// build); the SIMD variants are validated against these.

namespace corank::kernels {
namespace {

void matmul_nn_scalar(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool acc) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        if (!acc) std::fill(ci, ci + n, 0.0);
        const double* ai = a + i * k;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = ai[l];
            const double* bl = b + l * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
}

void matmul_nt_scalar(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool acc) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            double s = 0.0;
            for (std::size_t l = 0; l < k; ++l) s += ai[l] * bj[l];
            if (acc) ci[j] += s; else ci[j] = s;
        }
    }
}

void matmul_tn_scalar(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool acc) {
    if (!acc) std::fill(c, c + k * n, 0.0);
    for (std::size_t l = 0; l < m; ++l) {
        const double* al = a + l * k;
        const double* bl = b + l * n;
        for (std::size_t i = 0; i < k; ++i) {
            const double av = al[i];
            double* ci = c + i * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
}

void axpy_scalar(std::size_t n, double a, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(std::size_t n, double a, double* x) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double dot_scalar(std::size_t n, const double* x, const double* y) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sum_scalar(std::size_t n, const double* x) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

void add_bias_scalar(double* c, const double* bias, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        double* ci = c + i * cols;
        for (std::size_t j = 0; j < cols; ++j) ci[j] += bias[j];
    }
}

void relu_scalar(std::size_t n, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void adamw_update_scalar(std::size_t n, double* p, const double* g, double* m, double* v,
                         double lr, double beta1, double beta2, double eps, double wd,
                         double inv_bc1, double inv_bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        p[i] -= lr * wd * p[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] * inv_bc1;
        const double vhat = v[i] * inv_bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops = {
        matmul_nn_scalar, matmul_nt_scalar, matmul_tn_scalar,
        axpy_scalar,      scale_scalar,     dot_scalar,
        sum_scalar,       add_bias_scalar,  relu_scalar,
        adamw_update_scalar,
    };
    return ops;
}

}  // namespace corank::kernels
