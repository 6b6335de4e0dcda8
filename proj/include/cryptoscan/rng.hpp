#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

// Deterministic sampling helpers. std::mt19937_64 is bit-exact across
// platforms, but the standard *distributions* are not, so every transform
// that feeds a frozen test value or a hashed artifact is implemented here.

namespace cryptoscan {

// FNV-1a over bytes; used to derive independent engine seeds from
// (seed, tag, strings...) tuples.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::string_view a,
                                  std::string_view b = {},
                                  std::string_view c = {}) {
    std::uint64_t h = fnv1a64(a, seed ^ 1469598103934665603ULL);
    h = fnv1a64("\x1f", h); // field separator, keeps ("ab","c") != ("a","bc")
    h = fnv1a64(b, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(c, h);
    // splitmix64 finalizer to spread FNV's weak low bits
    h += 0x9e3779b97f4a7c15ULL;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Unbiased integer in [0, bound) by rejection on the top bits.
inline std::uint64_t bounded_uint(std::mt19937_64& eng, std::uint64_t bound) {
    if (bound <= 1) return 0;
    std::uint64_t mask = ~0ULL;
    mask >>= __builtin_clzll(bound - 1 | 1);
    for (;;) {
        std::uint64_t v = eng() & mask;
        if (v < bound) return v;
    }
}

// Standard normal via Box-Muller; consumes two uniforms per pair but we
// keep only one to stay stateless.
inline double normal01(std::mt19937_64& eng) {
    double u1;
    do {
        u1 = uniform01(eng);
    } while (u1 <= 0.0);
    double u2 = uniform01(eng);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925287 * u2);
}

// Marsaglia-Tsang gamma sampler; alpha < 1 handled by the boost
// G(a) = G(a+1) * U^(1/a).
inline double gamma_sample(std::mt19937_64& eng, double alpha) {
    if (alpha < 1.0) {
        double u;
        do {
            u = uniform01(eng);
        } while (u <= 0.0);
        return gamma_sample(eng, alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal01(eng);
        double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        double v = t * t * t;
        double u = uniform01(eng);
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
            return d * v;
    }
}

inline double beta_sample(std::mt19937_64& eng, double alpha, double beta) {
    double ga = gamma_sample(eng, alpha);
    double gb = gamma_sample(eng, beta);
    if (ga + gb <= 0.0) return 0.5; // underflow guard; effectively unreachable
    return ga / (ga + gb);
}

// Count of successes out of n independent trials with probability p.
inline int binomial_sample(std::mt19937_64& eng, int n, double p) {
    int k = 0;
    for (int i = 0; i < n; ++i)
        if (uniform01(eng) < p) ++k;
    return k;
}

// In-place Fisher-Yates.
template <typename Vec>
void shuffle_deterministic(Vec& v, std::mt19937_64& eng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(bounded_uint(eng, i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace cryptoscan
