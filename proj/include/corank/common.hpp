#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace corank {

// Raised for data and configuration problems. The CLI maps it to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Uniform double in [0,1) from the top 53 bits of the generator output.
// Avoids std::uniform_real_distribution, whose output is implementation
// defined; results must reproduce bit for bit from a seed.
inline double rng_unit(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline std::uint64_t rng_below(std::mt19937_64& g, std::uint64_t n) {
    return g() % n;
}

// Fisher-Yates with explicit draws; std::shuffle is implementation defined.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng_below(g, i));
        std::swap(v[i - 1], v[j]);
    }
}

inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a64(s.data(), s.size(), h);
}

// Pairwise summation; deterministic and more stable than a running sum.
inline double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_mean(const std::vector<double>& x) {
    if (x.empty()) throw Error("pairwise_mean: empty input");
    return pairwise_sum(x.data(), x.size()) / static_cast<double>(x.size());
}

}  // namespace corank
