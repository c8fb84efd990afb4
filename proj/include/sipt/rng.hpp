#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace sipt {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent streams from one seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(mix_seed(seed ^ mix_seed(stream + 0x5851f42d4c957f2dULL)));
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double normal(Rng& rng, double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(rng);
}

/// log of a Gamma(shape, 1) draw. Shapes below 1 use the boost
/// G(a) = G(a + 1) * U^(1/a) in log space, so tiny shapes do not underflow.
inline double log_gamma_draw(Rng& rng, double shape) {
    if (shape >= 1.0) {
        double g = std::gamma_distribution<double>(shape, 1.0)(rng);
        return std::log(std::max(g, std::numeric_limits<double>::min()));
    }
    double g = std::gamma_distribution<double>(shape + 1.0, 1.0)(rng);
    double u = uniform01(rng);
    while (u <= 0.0) {
        u = uniform01(rng);
    }
    return std::log(std::max(g, std::numeric_limits<double>::min())) + std::log(u) / shape;
}

/// Symmetric Dirichlet draw of the given dimension, normalized in log space.
inline std::vector<double> dirichlet(Rng& rng, std::size_t dim, double concentration) {
    std::vector<double> logs(dim);
    for (auto& l : logs) {
        l = log_gamma_draw(rng, concentration);
    }
    double mx = *std::max_element(logs.begin(), logs.end());
    std::vector<double> out(dim);
    double total = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        out[i] = std::exp(logs[i] - mx);
        total += out[i];
    }
    for (auto& v : out) {
        v /= total;
    }
    return out;
}

/// Fisher-Yates shuffle with our own index draws (std::shuffle is implementation-defined).
template <class T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = uniform_index(rng, i);
        std::swap(v[i - 1], v[j]);
    }
}

/// Draws `count` distinct indices from [0, n) in random order.
inline std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t count) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t j = i + uniform_index(rng, n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    return idx;
}

}  // namespace sipt
