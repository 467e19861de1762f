#include <algorithm>
#include <cmath>

#include "corank/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace corank::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

void matmul_nn_avx2(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool acc) {
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        if (!acc) std::fill(ci, ci + n, 0.0);
        const double* ai = a + i * k;
        for (std::size_t l = 0; l < k; ++l) {
            const __m256d av = _mm256_set1_pd(ai[l]);
            const double* bl = b + l * n;
            std::size_t j = 0;
            for (; j < n4; j += 4) {
                __m256d cv = _mm256_loadu_pd(ci + j);
                cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(bl + j), cv);
                _mm256_storeu_pd(ci + j, cv);
            }
            const double as = ai[l];
            for (; j < n; ++j) ci[j] += as * bl[j];
        }
    }
}

void matmul_nt_avx2(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool acc) {
    const std::size_t k4 = k & ~std::size_t(3);
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            __m256d accv = _mm256_setzero_pd();
            std::size_t l = 0;
            for (; l < k4; l += 4)
                accv = _mm256_fmadd_pd(_mm256_loadu_pd(ai + l), _mm256_loadu_pd(bj + l), accv);
            double s = hsum(accv);
            for (; l < k; ++l) s += ai[l] * bj[l];
            if (acc) ci[j] += s; else ci[j] = s;
        }
    }
}

void matmul_tn_avx2(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool acc) {
    if (!acc) std::fill(c, c + k * n, 0.0);
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t l = 0; l < m; ++l) {
        const double* al = a + l * k;
        const double* bl = b + l * n;
        for (std::size_t i = 0; i < k; ++i) {
            const __m256d av = _mm256_set1_pd(al[i]);
            double* ci = c + i * n;
            std::size_t j = 0;
            for (; j < n4; j += 4) {
                __m256d cv = _mm256_loadu_pd(ci + j);
                cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(bl + j), cv);
                _mm256_storeu_pd(ci + j, cv);
            }
            const double as = al[i];
            for (; j < n; ++j) ci[j] += as * bl[j];
        }
    }
}

void axpy_avx2(std::size_t n, double a, const double* x, double* y) {
    const __m256d av = _mm256_set1_pd(a);
    const std::size_t n4 = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < n4; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(std::size_t n, double a, double* x) {
    const __m256d av = _mm256_set1_pd(a);
    const std::size_t n4 = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < n4; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
    __m256d accv = _mm256_setzero_pd();
    const std::size_t n4 = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < n4; i += 4)
        accv = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), accv);
    double s = hsum(accv);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sum_avx2(std::size_t n, const double* x) {
    __m256d accv = _mm256_setzero_pd();
    const std::size_t n4 = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < n4; i += 4) accv = _mm256_add_pd(accv, _mm256_loadu_pd(x + i));
    double s = hsum(accv);
    for (; i < n; ++i) s += x[i];
    return s;
}

void add_bias_avx2(double* c, const double* bias, std::size_t rows, std::size_t cols) {
    const std::size_t c4 = cols & ~std::size_t(3);
    for (std::size_t i = 0; i < rows; ++i) {
        double* ci = c + i * cols;
        std::size_t j = 0;
        for (; j < c4; j += 4)
            _mm256_storeu_pd(ci + j, _mm256_add_pd(_mm256_loadu_pd(ci + j), _mm256_loadu_pd(bias + j)));
        for (; j < cols; ++j) ci[j] += bias[j];
    }
}

void relu_avx2(std::size_t n, const double* x, double* y) {
    const __m256d zero = _mm256_setzero_pd();
    const std::size_t n4 = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < n4; i += 4)
        _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void adamw_update_avx2(std::size_t n, double* p, const double* g, double* m, double* v,
                       double lr, double beta1, double beta2, double eps, double wd,
                       double inv_bc1, double inv_bc2) {
    const __m256d b1 = _mm256_set1_pd(beta1);
    const __m256d b2 = _mm256_set1_pd(beta2);
    const __m256d omb1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d omb2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d lrv = _mm256_set1_pd(lr);
    const __m256d lrwd = _mm256_set1_pd(lr * wd);
    const __m256d epsv = _mm256_set1_pd(eps);
    const __m256d bc1 = _mm256_set1_pd(inv_bc1);
    const __m256d bc2 = _mm256_set1_pd(inv_bc2);
    const std::size_t n4 = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < n4; i += 4) {
        __m256d pv = _mm256_loadu_pd(p + i);
        const __m256d gv = _mm256_loadu_pd(g + i);
        pv = _mm256_sub_pd(pv, _mm256_mul_pd(lrwd, pv));
        __m256d mv = _mm256_fmadd_pd(b1, _mm256_loadu_pd(m + i), _mm256_mul_pd(omb1, gv));
        __m256d vv = _mm256_fmadd_pd(b2, _mm256_loadu_pd(v + i),
                                     _mm256_mul_pd(omb2, _mm256_mul_pd(gv, gv)));
        _mm256_storeu_pd(m + i, mv);
        _mm256_storeu_pd(v + i, vv);
        const __m256d mhat = _mm256_mul_pd(mv, bc1);
        const __m256d vhat = _mm256_mul_pd(vv, bc2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), epsv);
        pv = _mm256_sub_pd(pv, _mm256_div_pd(_mm256_mul_pd(lrv, mhat), denom));
        _mm256_storeu_pd(p + i, pv);
    }
    for (; i < n; ++i) {
        p[i] -= lr * wd * p[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] * inv_bc1;
        const double vhat = v[i] * inv_bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

const Ops* avx2_ops() {
    static const Ops ops = {
        matmul_nn_avx2, matmul_nt_avx2, matmul_tn_avx2,
        axpy_avx2,      scale_avx2,     dot_avx2,
        sum_avx2,       add_bias_avx2,  relu_avx2,
        adamw_update_avx2,
    };
    return &ops;
}

bool built_with_avx2() { return true; }

}  // namespace corank::kernels

#else

namespace corank::kernels {

const Ops* avx2_ops() { return nullptr; }
bool built_with_avx2() { return false; }

}  // namespace corank::kernels

#endif
