#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "corank/common.hpp"
#include "corank/kernels.hpp"

using namespace corank;
namespace k = corank::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& g) {
    std::vector<double> v(n);
    for (auto& x : v) x = 2.0 * rng_unit(g) - 1.0;
    return v;
}

std::vector<double> transpose(const std::vector<double>& a, std::size_t r, std::size_t c) {
    std::vector<double> t(a.size());
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) t[j * r + i] = a[i * c + j];
    return t;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        double denom = std::max({1.0, std::fabs(a[i]), std::fabs(b[i])});
        CHECK(std::fabs(a[i] - b[i]) / denom <= tol);
    }
}

}  // namespace

TEST_CASE("matmul transpose variants agree with explicit transposition") {
    std::mt19937_64 g(11);
    const auto& ops = k::scalar_ops();
    for (int it = 0; it < 20; ++it) {
        std::size_t m = 1 + rng_below(g, 9);
        std::size_t kk = 1 + rng_below(g, 9);
        std::size_t n = 1 + rng_below(g, 9);
        auto a = random_vec(m * kk, g);
        auto b = random_vec(kk * n, g);

        std::vector<double> c_nn(m * n);
        ops.matmul_nn(a.data(), b.data(), c_nn.data(), m, kk, n, false);

        auto bt = transpose(b, kk, n);  // n x kk
        std::vector<double> c_nt(m * n);
        ops.matmul_nt(a.data(), bt.data(), c_nt.data(), m, kk, n, false);
        CHECK(c_nn == c_nt);

        auto at = transpose(a, m, kk);  // kk x m
        std::vector<double> c_tn(m * n);
        ops.matmul_tn(at.data(), b.data(), c_tn.data(), kk, m, n, false);
        CHECK(c_nn == c_tn);
    }
}

TEST_CASE("matmul accumulate adds onto existing contents") {
    std::mt19937_64 g(12);
    const auto& ops = k::scalar_ops();
    std::size_t m = 3, kk = 5, n = 4;
    auto a = random_vec(m * kk, g);
    auto b = random_vec(kk * n, g);
    auto base = random_vec(m * n, g);

    std::vector<double> prod(m * n);
    ops.matmul_nn(a.data(), b.data(), prod.data(), m, kk, n, false);

    auto acc = base;
    ops.matmul_nn(a.data(), b.data(), acc.data(), m, kk, n, true);
    for (std::size_t i = 0; i < acc.size(); ++i)
        CHECK(acc[i] == doctest::Approx(base[i] + prod[i]).epsilon(1e-12));
}

TEST_CASE("simd kernels match the scalar reference") {
    const k::Ops* simd = k::avx2_ops();
    if (simd == nullptr || !k::cpu_supports_avx2()) {
        MESSAGE("avx2 unavailable; skipping");
        return;
    }
    const auto& ref = k::scalar_ops();
    std::mt19937_64 g(13);
    const double tol = 1e-12;

    for (int it = 0; it < 30; ++it) {
        // Shapes chosen to exercise both full vector lanes and remainders.
        std::size_t m = 1 + rng_below(g, 13);
        std::size_t kk = 1 + rng_below(g, 33);
        std::size_t n = 1 + rng_below(g, 33);

        auto a = random_vec(m * kk, g);
        auto b = random_vec(kk * n, g);
        auto bt = transpose(b, kk, n);
        auto at = transpose(a, m, kk);

        std::vector<double> c0(m * n), c1(m * n);
        ref.matmul_nn(a.data(), b.data(), c0.data(), m, kk, n, false);
        simd->matmul_nn(a.data(), b.data(), c1.data(), m, kk, n, false);
        check_close(c0, c1, tol);

        ref.matmul_nt(a.data(), bt.data(), c0.data(), m, kk, n, false);
        simd->matmul_nt(a.data(), bt.data(), c1.data(), m, kk, n, false);
        check_close(c0, c1, tol);

        ref.matmul_tn(at.data(), b.data(), c0.data(), kk, m, n, false);
        simd->matmul_tn(at.data(), b.data(), c1.data(), kk, m, n, false);
        check_close(c0, c1, tol);

        std::size_t len = 1 + rng_below(g, 200);
        auto x = random_vec(len, g);
        auto y0 = random_vec(len, g);
        auto y1 = y0;
        double alpha = 2.0 * rng_unit(g) - 1.0;

        ref.axpy(len, alpha, x.data(), y0.data());
        simd->axpy(len, alpha, x.data(), y1.data());
        check_close(y0, y1, tol);

        auto s0 = x, s1 = x;
        ref.scale(len, alpha, s0.data());
        simd->scale(len, alpha, s1.data());
        check_close(s0, s1, tol);

        double d0 = ref.dot(len, x.data(), y0.data());
        double d1 = simd->dot(len, x.data(), y0.data());
        CHECK(std::fabs(d0 - d1) / std::max(1.0, std::fabs(d0)) <= tol);

        double t0 = ref.sum(len, x.data());
        double t1 = simd->sum(len, x.data());
        CHECK(std::fabs(t0 - t1) / std::max(1.0, std::fabs(t0)) <= tol);

        std::vector<double> r0(len), r1(len);
        ref.relu(len, x.data(), r0.data());
        simd->relu(len, x.data(), r1.data());
        CHECK(r0 == r1);

        auto bias = random_vec(n, g);
        auto m0 = random_vec(m * n, g);
        auto m1 = m0;
        ref.add_bias(m0.data(), bias.data(), m, n);
        simd->add_bias(m1.data(), bias.data(), m, n);
        check_close(m0, m1, tol);

        auto p0 = random_vec(len, g);
        auto p1 = p0;
        auto grad = random_vec(len, g);
        auto mm0 = random_vec(len, g);
        auto mm1 = mm0;
        auto vv0 = random_vec(len, g);
        for (auto& e : vv0) e = std::fabs(e);
        auto vv1 = vv0;
        ref.adamw_update(len, p0.data(), grad.data(), mm0.data(), vv0.data(),
                         1e-3, 0.9, 0.999, 1e-8, 0.01, 1.0 / (1 - 0.9), 1.0 / (1 - 0.999));
        simd->adamw_update(len, p1.data(), grad.data(), mm1.data(), vv1.data(),
                           1e-3, 0.9, 0.999, 1e-8, 0.01, 1.0 / (1 - 0.9), 1.0 / (1 - 0.999));
        check_close(p0, p1, tol);
        check_close(mm0, mm1, tol);
        check_close(vv0, vv1, tol);
    }
}

TEST_CASE("adamw first step moves a unit-gradient parameter by about -lr") {
    // One step from zero state with g=1, lr=0.1, wd=0:
    // m=0.1, v=0.001, mhat=1, vhat=1, step = -0.1/(1+eps).
    double p = 1.0, gr = 1.0, m = 0.0, v = 0.0;
    const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    k::scalar_ops().adamw_update(1, &p, &gr, &m, &v, lr, b1, b2, eps, 0.0,
                                 1.0 / (1.0 - b1), 1.0 / (1.0 - b2));
    CHECK(p == doctest::Approx(1.0 - 0.1).epsilon(1e-7));
    CHECK(p == doctest::Approx(1.0 - lr / (1.0 + eps)).epsilon(1e-15));
    CHECK(m == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(v == doctest::Approx(0.001).epsilon(1e-12));
}

TEST_CASE("decoupled decay shrinks parameters even with zero gradient") {
    double p = 2.0, gr = 0.0, m = 0.0, v = 0.0;
    const double lr = 0.1, wd = 0.5;
    k::scalar_ops().adamw_update(1, &p, &gr, &m, &v, lr, 0.9, 0.999, 1e-8, wd,
                                 1.0 / (1.0 - 0.9), 1.0 / (1.0 - 0.999));
    // Zero gradient keeps the Adam term at zero; only decay acts.
    CHECK(p == doctest::Approx(2.0 * (1.0 - lr * wd)).epsilon(1e-15));
}

TEST_CASE("active isa resolves and dispatch produces kernel output") {
    k::Isa isa = k::active_isa();
    CHECK((isa == k::Isa::Scalar || isa == k::Isa::Avx2));
    std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 5.0};
    CHECK(k::sum(x.size(), x.data()) == doctest::Approx(15.0).epsilon(1e-15));
}
