#ifndef RANDDE_RANDOMIZATION_MATH_HPP
#define RANDDE_RANDOMIZATION_MATH_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"

/**
 * @file randomization_math.hpp
 *
 * @brief Combinatorial and binomial-tail machinery behind the randomized detector.
 *
 * The detector repeatedly draws a normalization subset of k genes out of m and
 * tests every gene outside the subset. The quantities here describe that draw:
 * the chance a subset avoids a fixed gene, the chance a subset avoiding a gene
 * is contaminated by differentially expressed (DE) genes, the induced bounds on
 * per-randomization detection rates, the pooled binomial p-values, the cap on
 * how many detections a single step-down pass may claim, and the number of
 * randomizations needed for a target family-wise error rate (FWER).
 */

namespace randde {

/**
 * @brief Design of one detection run.
 */
struct DesignParams {
    /** Number of genes currently under test. */
    std::int64_t m = 0;
    /** Size of each normalization subset. */
    std::int64_t k = 10;
    /** Number of randomizations (subset draws). */
    std::int64_t r = 2500;
    /** Per-test level of the single-gene test. */
    double eta = 0.05;
    /** FWER target of the whole procedure. */
    double alpha = 0.05;
    /** Type-II budget of the single-gene test. */
    double beta = 0.10;
    /** Quantile inflation constant of the single-gene test. */
    double c = 2.0;
    /** Deviation-split exponent for the randomization-count requirement. */
    double xi = 0.25;
};

/**
 * Validate a `DesignParams`, throwing `ConfigError` on the first violation.
 *
 * @param p Parameters to check.
 * @param require_headroom If true, additionally require m > k + 1 so that at
 * least two genes lie outside every subset (needed for an actual run).
 */
inline void validate(const DesignParams& p, bool require_headroom = true) {
    if (p.k < 1 || p.k > p.m - 1) {
        throw ConfigError("design: need 1 <= k <= m - 1 (k=" + std::to_string(p.k) + ", m=" + std::to_string(p.m) + ")");
    }
    if (require_headroom && p.m <= p.k + 1) {
        throw ConfigError("design: need m > k + 1 so genes remain testable outside the subset");
    }
    if (p.r < 1) {
        throw ConfigError("design: need r >= 1");
    }
    if (!(p.eta > 0 && p.eta < 1) || !(p.alpha > 0 && p.alpha < 1) || !(p.beta > 0 && p.beta < 1)) {
        throw ConfigError("design: eta, alpha, beta must lie strictly inside (0, 1)");
    }
    if (!(p.c >= 0) || !std::isfinite(p.c)) {
        throw ConfigError("design: c must be finite and non-negative");
    }
    if (!(p.xi > 0 && p.xi < 0.5)) {
        throw ConfigError("design: xi must lie strictly inside (0, 0.5)");
    }
}

/**
 * @brief Detection-rate bounds for a hypothesized number of DE genes.
 *
 * Over one randomization, a gene outside the subset is detected with
 * probability at most `theta0` if it is invariant and at least `theta1` if it
 * is DE-detectable. Separation (`theta1 > theta0`) is what makes the pooled
 * counts informative.
 */
struct RateBounds {
    /** Upper bound on the per-randomization detection rate of an invariant gene. */
    double theta0 = 0;
    /** Lower bound on the per-randomization detection rate of a DE-detectable gene. */
    double theta1 = 0;
    /** Hypothesized number of DE-detectable genes the bounds were computed for. */
    std::int64_t d = 0;
};

namespace internal {

inline double log_choose(std::int64_t n, std::int64_t k) {
    // Callers guarantee 0 <= k <= n; log-gamma keeps large m from overflowing.
    return std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(k) + 1)
           - std::lgamma(static_cast<double>(n - k) + 1);
}

// exp(log_choose(a, k) - log_choose(b, k)) for a <= b, i.e. C(a,k)/C(b,k).
inline double choose_ratio(std::int64_t a, std::int64_t b, std::int64_t k) {
    if (a < k) {
        return 0.0;
    }
    if (a == b) {
        return 1.0;
    }
    return std::exp(log_choose(a, k) - log_choose(b, k));
}

}

/**
 * Probability that a uniformly drawn k-subset of m genes avoids a fixed gene.
 *
 * @param m Gene count.
 * @param k Subset size, 1 <= k <= m - 1.
 * @return 1 - k/m.
 */
inline double kappa(std::int64_t m, std::int64_t k) {
    if (k < 1 || k >= m) {
        throw ConfigError("kappa: need 1 <= k <= m - 1");
    }
    return 1.0 - static_cast<double>(k) / static_cast<double>(m);
}

/**
 * Probability that a subset avoiding a fixed invariant gene is "wrong", i.e.
 * intersects a planted set of d DE-detectable genes (none of which is the
 * fixed gene). Equals 1 - C(m-d-1, k)/C(m-1, k) while the complement can still
 * hold all d planted genes (d <= m - k - 1), and 1 beyond that.
 *
 * @param m Gene count.
 * @param k Subset size.
 * @param d Planted DE-detectable gene count, d >= 0.
 * @return The contamination probability for an invariant tested gene.
 */
inline double pi0(std::int64_t m, std::int64_t k, std::int64_t d) {
    if (k < 1 || k >= m) {
        throw ConfigError("pi0: need 1 <= k <= m - 1");
    }
    if (d < 0 || d > m) {
        throw ConfigError("pi0: need 0 <= d <= m");
    }
    if (d > m - k - 1) {
        return 1.0;
    }
    return 1.0 - internal::choose_ratio(m - d - 1, m - 1, k);
}

/**
 * Same contamination probability when the fixed gene is itself one of the d
 * DE-detectable genes, so only the other d - 1 can land in the subset. Equals
 * 1 - C(m-d, k)/C(m-1, k) for 0 < d <= m - k, 1 beyond, and 0 at d = 0 by
 * convention.
 *
 * @param m Gene count.
 * @param k Subset size.
 * @param d Planted DE-detectable gene count, d >= 0.
 * @return The contamination probability for a DE-detectable tested gene.
 */
inline double pi1(std::int64_t m, std::int64_t k, std::int64_t d) {
    if (k < 1 || k >= m) {
        throw ConfigError("pi1: need 1 <= k <= m - 1");
    }
    if (d < 0 || d > m) {
        throw ConfigError("pi1: need 0 <= d <= m");
    }
    if (d == 0) {
        return 0.0;
    }
    if (d > m - k) {
        return 1.0;
    }
    return 1.0 - internal::choose_ratio(m - d, m - 1, k);
}

/**
 * Per-randomization detection-rate bounds under a hypothesized DE count.
 *
 * theta0 = kappa * (eta * (1 - pi0) + pi0): an invariant gene is tested when
 * the subset avoids it, and then falsely detected at rate at most eta on clean
 * subsets and (pessimistically) 1 on contaminated ones. theta1 =
 * kappa * (1 - beta) * (1 - pi1): a DE gene is detected at rate at least
 * 1 - beta, but only credited on clean subsets.
 *
 * @param params Design.
 * @param d Hypothesized DE-detectable gene count.
 * @return Both bounds together with `d`.
 */
inline RateBounds rate_bounds(const DesignParams& params, std::int64_t d) {
    const double kap = kappa(params.m, params.k);
    const double p0 = pi0(params.m, params.k, d);
    const double p1 = pi1(params.m, params.k, d);
    RateBounds out;
    out.theta0 = kap * (params.eta * (1.0 - p0) + p0);
    out.theta1 = kap * (1.0 - params.beta) * (1.0 - p1);
    out.d = d;
    return out;
}

namespace internal {

// P(Bin(n, p) > x) via stable tail summation; no normal approximation
// anywhere. The pmf recurrence is seeded at the tail's boundary term (its
// largest), walked outward until underflow, and the stored terms are added
// smallest-first; seeding at the far end would underflow for large n.
inline double binom_sf(std::int64_t x, std::int64_t n, double p) {
    if (x < 0) {
        return 1.0;
    }
    if (x >= n) {
        return 0.0;
    }
    if (p <= 0.0) {
        return 0.0;
    }
    if (p >= 1.0) {
        return 1.0;
    }

    const double logp = std::log(p);
    const double log1mp = std::log1p(-p);
    auto log_pmf = [&](std::int64_t j) {
        return log_choose(n, j) + static_cast<double>(j) * logp + static_cast<double>(n - j) * log1mp;
    };

    // Sum whichever tail the threshold cuts below the mode; the complement is
    // returned for the other side, so cancellation never amplifies a small
    // result.
    const double mode = (static_cast<double>(n) + 1) * p;
    std::vector<double> terms;
    double sum = 0.0;
    if (static_cast<double>(x) + 1 >= mode) {
        // Upper tail j = x+1, ..., n (descending magnitude).
        double term = std::exp(log_pmf(x + 1));
        const double odds = p / (1.0 - p);
        for (std::int64_t j = x + 1; j <= n && term > 0.0; ++j) {
            terms.push_back(term);
            term *= static_cast<double>(n - j) * odds / static_cast<double>(j + 1);
        }
        for (auto it = terms.rbegin(); it != terms.rend(); ++it) {
            sum += *it;
        }
        return std::min(sum, 1.0);
    }
    // Lower tail j = x, x-1, ..., 0 (descending magnitude).
    double term = std::exp(log_pmf(x));
    const double odds_inv = (1.0 - p) / p;
    for (std::int64_t j = x; j >= 0 && term > 0.0; --j) {
        terms.push_back(term);
        term *= static_cast<double>(j) * odds_inv / static_cast<double>(n - j + 1);
    }
    for (auto it = terms.rbegin(); it != terms.rend(); ++it) {
        sum += *it;
    }
    return 1.0 - std::min(sum, 1.0);
}

}

/**
 * Binomial cumulative distribution function, P(Bin(n_trials, p) <= x).
 *
 * @param x Threshold; x < 0 yields 0 and x >= n_trials yields 1.
 * @param n_trials Number of trials, >= 0.
 * @param p Success probability in [0, 1].
 * @return The exact CDF value via stable tail summation.
 */
inline double binom_cdf(std::int64_t x, std::int64_t n_trials, double p) {
    if (n_trials < 0) {
        throw ConfigError("binom_cdf: need n_trials >= 0");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ConfigError("binom_cdf: need 0 <= p <= 1");
    }
    if (x < 0) {
        return 0.0;
    }
    if (x >= n_trials) {
        return 1.0;
    }
    return 1.0 - internal::binom_sf(x, n_trials, p);
}

/**
 * Pooled p-value of a gene that collected R_j detections over r randomizations,
 * under the hypothesis that at most d genes are DE-detectable:
 * P(Bin(r, theta0(d)) > R_j). Strictly decreasing in R_j, and exactly 0 at
 * R_j = r; the gene ranking it induces does not depend on d or eta.
 *
 * @param R_j Detection count, 0 <= R_j <= r.
 * @param params Design (r, m, k, eta).
 * @param d Hypothesized DE-detectable gene count.
 * @return The upper binomial tail beyond R_j.
 */
inline double pooled_p_value(std::int64_t R_j, const DesignParams& params, std::int64_t d) {
    if (R_j < 0 || R_j > params.r) {
        throw ConfigError("pooled_p_value: need 0 <= R_j <= r");
    }
    const double theta0 = rate_bounds(params, d).theta0;
    return internal::binom_sf(R_j, params.r, theta0);
}

/**
 * Whether the detection-rate bounds remain separated at a hypothesized DE
 * count: (1 - beta)(1 - pi1_d) > eta (1 - pi0_d) + pi0_d.
 */
inline bool rates_separated(const DesignParams& params, std::int64_t d) {
    const double p0 = pi0(params.m, params.k, d);
    const double p1 = pi1(params.m, params.k, d);
    return (1.0 - params.beta) * (1.0 - p1) > params.eta * (1.0 - p0) + p0;
}

/**
 * Largest DE count d at which the rate bounds stay separated; one step-down
 * pass never declares more than this many genes. The left side of the
 * separation inequality decreases in d and the right side increases, so a
 * linear scan with early exit is exact; the result is re-checked to fail at
 * d + 1.
 *
 * @param params Design.
 * @return The cap (0 when only d = 0 is separated).
 */
inline std::int64_t delta_cap(const DesignParams& params) {
    if (!rates_separated(params, 0)) {
        // At d = 0 the inequality reads (1 - beta) > eta.
        throw ConfigError("delta_cap: design cannot detect anything: 1 - beta <= eta");
    }
    std::int64_t d = 1;
    while (d <= params.m && rates_separated(params, d)) {
        ++d;
    }
    return d - 1;
}

/**
 * Bernstein-type upper bound on the upper binomial tail,
 * P(Bin(n, p) - n p > n eps) <= exp(-n eps^2 / (2 (p + eps/3)(1 - p - eps/3))).
 *
 * @param n_trials Number of trials.
 * @param p Success probability, strictly inside (0, 1).
 * @param eps Deviation, 0 < eps < 1 - p.
 * @return The bound (always <= 1).
 */
inline double massart_tail(std::int64_t n_trials, double p, double eps) {
    if (!(p > 0.0 && p < 1.0)) {
        throw ConfigError("massart_tail: need 0 < p < 1");
    }
    if (!(eps > 0.0 && eps < 1.0 - p)) {
        throw ConfigError("massart_tail: need 0 < eps < 1 - p");
    }
    const double q = p + eps / 3.0;
    return std::exp(-static_cast<double>(n_trials) * eps * eps / (2.0 * q * (1.0 - q)));
}

/**
 * Smallest number of randomizations guaranteeing both FWER control and
 * exponentially growing power at the hypothesized DE count, as the maximum of
 * three closed-form requirements evaluated at xi = 0.25:
 * 1/sqrt(theta0), [-(8/3) log(alpha/m)]^2, and [2 sqrt(theta0)/(theta1 - theta0)]^4.
 *
 * @param params Design.
 * @param d Hypothesized DE-detectable gene count.
 * @return Ceiling of the largest of the three terms.
 */
inline std::int64_t min_randomizations(const DesignParams& params, std::int64_t d) {
    const RateBounds rb = rate_bounds(params, d);
    if (!(rb.theta1 > rb.theta0)) {
        throw InfeasibleDesignError(
            "min_randomizations: design underpowered at d=" + std::to_string(d)
            + ": theta1=" + std::to_string(rb.theta1) + " <= theta0=" + std::to_string(rb.theta0));
    }
    const double t1 = 1.0 / std::sqrt(rb.theta0);
    const double l = -(8.0 / 3.0) * std::log(params.alpha / static_cast<double>(params.m));
    const double t2 = l * l;
    const double ratio = 2.0 * std::sqrt(rb.theta0) / (rb.theta1 - rb.theta0);
    const double t3 = ratio * ratio * ratio * ratio;
    const double req = std::max(t1, std::max(t2, t3));
    return static_cast<std::int64_t>(std::ceil(req));
}

/**
 * Generic-exponent variant of the FWER-only randomization requirement:
 * r >= theta0^{1/(2 xi - 1)} or r >= [-(8/3) log(alpha/m)]^{1/(2 xi)},
 * whichever is larger. Callers that need a different deviation split between
 * the FWER and power sides use this in place of the fixed xi = 0.25 form.
 *
 * @param params Design.
 * @param d Hypothesized DE-detectable gene count.
 * @param xi Deviation exponent, strictly inside (0, 0.5).
 * @return Ceiling of the larger of the two terms.
 */
inline std::int64_t min_randomizations_fwer(const DesignParams& params, std::int64_t d, double xi) {
    if (!(xi > 0 && xi < 0.5)) {
        throw ConfigError("min_randomizations_fwer: need 0 < xi < 0.5");
    }
    const double theta0 = rate_bounds(params, d).theta0;
    const double t1 = std::pow(theta0, 1.0 / (2.0 * xi - 1.0));
    const double l = -(8.0 / 3.0) * std::log(params.alpha / static_cast<double>(params.m));
    const double t2 = std::pow(l, 1.0 / (2.0 * xi));
    return static_cast<std::int64_t>(std::ceil(std::max(t1, t2)));
}

}

#endif
