#ifndef RANDDE_RNG_HPP
#define RANDDE_RNG_HPP

#include <cmath>
#include <cstdint>

#include "errors.hpp"
#include "normal.hpp"

/**
 * @file rng.hpp
 *
 * @brief Deterministic, platform-independent random number streams.
 *
 * Every random quantity in the library is drawn from an `RngStream` keyed by a
 * master seed plus integer coordinates (purpose tag, iteration, draw index, ...).
 * All samplers below are implemented from scratch on 64-bit integer arithmetic;
 * none rely on `<random>` distributions, whose output is implementation-defined.
 * A given (seed, coordinates) pair therefore produces identical values on any
 * platform and under any thread count.
 */

namespace randde {

/**
 * Finalizing 64-bit mix (splitmix64). Bijective with full avalanche.
 */
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/**
 * @brief Counter-keyed pseudo-random stream (splitmix64 sequence).
 */
class RngStream {
public:
    explicit RngStream(std::uint64_t key) : state_(key) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    /** Uniform double in the open interval (0, 1). */
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /** Uniform integer in [0, bound), bias-free via multiply-and-reject. */
    std::uint64_t uniform_below(std::uint64_t bound) {
        if (bound == 0) {
            throw ConfigError("uniform_below: bound must be positive");
        }
        std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t x = next_u64();
            unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
            if (static_cast<std::uint64_t>(m) >= threshold) {
                return static_cast<std::uint64_t>(m >> 64);
            }
        }
    }

    /** Standard normal deviate by quantile inversion (one uniform per draw). */
    double normal() {
        return normal_quantile(uniform());
    }

    /**
     * Poisson deviate with mean `lambda`. Sequential inversion below 10,
     * transformed rejection (Hormann's PTRD) above.
     */
    long long poisson(double lambda) {
        if (lambda < 0 || !std::isfinite(lambda)) {
            throw ConfigError("poisson: mean must be finite and non-negative");
        }
        if (lambda == 0) {
            return 0;
        }
        if (lambda < 10.0) {
            return poisson_inversion(lambda);
        }
        return poisson_ptrd(lambda);
    }

    /** Gamma deviate with the given shape and scale (Marsaglia-Tsang). */
    double gamma(double shape, double scale) {
        if (!(shape > 0) || !(scale > 0)) {
            throw ConfigError("gamma: shape and scale must be positive");
        }
        if (shape < 1.0) {
            // Boost to shape + 1, then correct with a power of a uniform.
            double g = gamma_mt(shape + 1.0);
            return g * std::pow(uniform(), 1.0 / shape) * scale;
        }
        return gamma_mt(shape) * scale;
    }

private:
    std::uint64_t state_;

    long long poisson_inversion(double lambda) {
        double p = std::exp(-lambda);
        double cum = p;
        double u = uniform();
        long long k = 0;
        while (u > cum && k < 1000) {
            ++k;
            p *= lambda / static_cast<double>(k);
            cum += p;
        }
        return k;
    }

    long long poisson_ptrd(double lambda) {
        const double smu = std::sqrt(lambda);
        const double b = 0.931 + 2.53 * smu;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        const double log_lambda = std::log(lambda);

        for (;;) {
            double U = uniform() - 0.5;
            double V = uniform();
            double us = 0.5 - std::fabs(U);
            double kf = std::floor((2.0 * a / us + b) * U + lambda + 0.43);
            if (us >= 0.07 && V <= v_r) {
                return static_cast<long long>(kf);
            }
            if (kf < 0 || (us < 0.013 && V > us)) {
                continue;
            }
            double k = kf;
            if (std::log(V * inv_alpha / (a / (us * us) + b))
                <= -lambda + k * log_lambda - std::lgamma(k + 1.0)) {
                return static_cast<long long>(kf);
            }
        }
    }

    double gamma_mt(double shape) {
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            double u = uniform();
            double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) {
                return d * v;
            }
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
                return d * v;
            }
        }
    }
};

/**
 * Derive an independent stream from a master seed and up to three coordinates.
 *
 * The derivation chains bijective mixes, so streams with distinct coordinates
 * are decorrelated regardless of how close the inputs are numerically.
 *
 * @param seed Master seed.
 * @param tag Purpose tag separating uses of the same seed.
 * @param a First coordinate (e.g. iteration or replicate index).
 * @param b Second coordinate (e.g. draw index).
 * @return A stream keyed by the combined identity.
 */
inline RngStream derive_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t k = mix64(seed ^ 0xA0761D6478BD642FULL);
    k = mix64(k + 0x9E3779B97F4A7C15ULL * (tag + 1));
    k = mix64(k + 0x9E3779B97F4A7C15ULL * (a + 1));
    k = mix64(k + 0x9E3779B97F4A7C15ULL * (b + 1));
    return RngStream(k);
}

/** Purpose tags for `derive_stream()`. */
namespace stream_tag {
inline constexpr std::uint64_t subset_draw = 1;   ///< one stream per (iteration, draw index)
inline constexpr std::uint64_t simulate = 2;      ///< one stream per replicate
inline constexpr std::uint64_t replicate_run = 3; ///< detector seed inside a simulation replicate
}

}

#endif
