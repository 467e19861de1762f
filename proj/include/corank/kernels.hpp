#pragma once

#include <cstddef>

namespace corank::kernels {

// =====================================================================
// Dense double-precision kernels. A scalar reference implementation is
// always built; an AVX2+FMA variant is compiled when the toolchain
// supports it and selected at runtime when the CPU does. Set
// CORANK_ISA=scalar or CORANK_ISA=avx2 to override the choice.
// =====================================================================

enum class Isa { Scalar, Avx2 };

const char* isa_name(Isa isa);
bool cpu_supports_avx2();
bool built_with_avx2();
Isa active_isa();

struct Ops {
    // C(m x n) = A(m x k) * B(k x n); accumulates into C when acc is true.
    void (*matmul_nn)(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool acc);
    // C(m x n) = A(m x k) * B(n x k)^T
    void (*matmul_nt)(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool acc);
    // C(k x n) = A(m x k)^T * B(m x n)
    void (*matmul_tn)(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool acc);
    void (*axpy)(std::size_t n, double a, const double* x, double* y);
    void (*scale)(std::size_t n, double a, double* x);
    double (*dot)(std::size_t n, const double* x, const double* y);
    double (*sum)(std::size_t n, const double* x);
    void (*add_bias)(double* c, const double* bias, std::size_t rows, std::size_t cols);
    void (*relu)(std::size_t n, const double* x, double* y);
    // Decoupled weight decay applied before the Adam update term.
    // inv_bc1 = 1/(1-beta1^t), inv_bc2 = 1/(1-beta2^t).
    void (*adamw_update)(std::size_t n, double* p, const double* g, double* m, double* v,
                         double lr, double beta1, double beta2, double eps, double wd,
                         double inv_bc1, double inv_bc2);
};

const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when unavailable
const Ops& active_ops();

// Dispatching wrappers used by the rest of the library.

inline void matmul_nn(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool acc = false) {
    active_ops().matmul_nn(a, b, c, m, k, n, acc);
}

inline void matmul_nt(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool acc = false) {
    active_ops().matmul_nt(a, b, c, m, k, n, acc);
}

inline void matmul_tn(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool acc = false) {
    active_ops().matmul_tn(a, b, c, m, k, n, acc);
}

inline void axpy(std::size_t n, double a, const double* x, double* y) {
    active_ops().axpy(n, a, x, y);
}

inline void scale(std::size_t n, double a, double* x) {
    active_ops().scale(n, a, x);
}

inline double dot(std::size_t n, const double* x, const double* y) {
    return active_ops().dot(n, x, y);
}

inline double sum(std::size_t n, const double* x) {
    return active_ops().sum(n, x);
}

inline void add_bias(double* c, const double* bias, std::size_t rows, std::size_t cols) {
    active_ops().add_bias(c, bias, rows, cols);
}

inline void relu(std::size_t n, const double* x, double* y) {
    active_ops().relu(n, x, y);
}

inline void adamw_update(std::size_t n, double* p, const double* g, double* m, double* v,
                         double lr, double beta1, double beta2, double eps, double wd,
                         double inv_bc1, double inv_bc2) {
    active_ops().adamw_update(n, p, g, m, v, lr, beta1, beta2, eps, wd, inv_bc1, inv_bc2);
}

}  // namespace corank::kernels
