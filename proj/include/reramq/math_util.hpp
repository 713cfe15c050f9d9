// Small numeric helpers shared across the library: Gaussian tail function,
// entropy terms, exact binomials, log-sum-exp, Wilson score intervals and
// deterministic RNG substream derivation.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace reramq {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Gaussian upper-tail probability Q(x) = Pr(Z > x) for Z ~ N(0,1).
inline double q_function(double x) {
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

/// Standard normal density.
inline double gauss_pdf(double x, double sigma) {
    const double z = x / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

/// p * log2(p) with the 0*log0 := 0 convention.
inline double xlog2x(double p) {
    return p > 0.0 ? p * std::log2(p) : 0.0;
}

/// Binary entropy in bits.
inline double binary_entropy(double p) {
    return -xlog2x(p) - xlog2x(1.0 - p);
}

/// Exact binomial coefficient; throws if the result exceeds 64 bits.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
        if (r > std::numeric_limits<std::uint64_t>::max())
            throw std::overflow_error("binomial: result does not fit in 64 bits");
    }
    return static_cast<std::uint64_t>(r);
}

/// Probability mass of N(mu, sigma^2) on the interval (a, b], accurate deep
/// in either tail. Infinite endpoints allowed.
inline double gauss_interval_mass(double a, double b, double mu, double sigma) {
    if (!(b > a)) return 0.0;
    const double za = (a - mu) / sigma;
    const double zb = (b - mu) / sigma;
    if (za >= 0.0) return std::max(0.0, q_function(za) - q_function(zb));
    if (zb <= 0.0) return std::max(0.0, q_function(-zb) - q_function(-za));
    return std::max(0.0, 1.0 - q_function(-za) - q_function(zb));
}

/// log(sum(exp(x_i))) evaluated stably.
inline double log_sum_exp(std::span<const double> xs) {
    double m = -kInf;
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

/// Half-width of the 95% Wilson score interval for k successes in n trials.
inline double wilson_half_width(std::uint64_t k, std::uint64_t n, double z = 1.959963984540054) {
    if (n == 0) return 1.0;
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    return z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / (1.0 + z2 / nn);
}

/// SplitMix64 finalizer; used to derive independent substream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Deterministic substream seed for (base seed, stream index).
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(seed ^ mix64(stream + 1));
}

/// Uniform double in [0,1) from a 64-bit generator, 53 bits of precision.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace reramq
