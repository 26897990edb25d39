#ifndef RANDDE_GENE_TEST_HPP
#define RANDDE_GENE_TEST_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "count_matrix.hpp"
#include "errors.hpp"
#include "normal.hpp"
#include "scaling.hpp"

/**
 * @file gene_test.hpp
 *
 * @brief Per-gene two-group test on variance-stabilized counts.
 *
 * Counts are mapped to Y_ij = 2 sqrt(X_ij / s_hat_i); the statistic
 * T = (Ybar_A - Ybar_B) / Sigma_hat compares group means against the pooled
 * standard-error estimate and is referred to an inflated normal quantile
 * (1 + sqrt(c log n)) * Phi^-1(1 - eta/2). The inflation absorbs the error
 * introduced by estimated scaling factors; closed-form bounds on that error
 * are evaluated here as well.
 */

namespace randde {

/**
 * @brief Parameters of the single-gene test.
 */
struct TestParams {
    /** Per-test level. */
    double eta = 0.05;
    /** Quantile inflation constant (0 recovers the plain normal quantile). */
    double c = 2.0;
    /** Total sample count. */
    std::int64_t n = 0;
    /** Group A size. */
    std::int64_t n_A = 0;
    /** Group B size. */
    std::int64_t n_B = 0;
};

/**
 * @brief Result of testing one gene against one reference subset.
 */
struct GeneTestOutcome {
    /** The statistic T. */
    double t_value = 0;
    /** Pooled standard-error estimate, strictly positive. */
    double sigma_hat = 0;
    /** Whether |T| exceeded the inflated quantile. */
    bool rejected = false;
};

/**
 * @brief Closed-form bounds on the three error terms of the statistic when
 * scaling factors are estimated rather than known.
 *
 * All constant factors that vanish asymptotically are evaluated as exactly 1,
 * so the values are asymptotic bounds reported at finite n.
 */
struct TStatErrorBounds {
    /** Bound on the true-to-estimated standard-error ratio. */
    double variance_ratio_bound = 0;
    /** Bound on the squared noise remainder relative to the true variance. */
    double noise_term_bound = 0;
    /** Bound on the squared mean-shift remainder relative to the true variance. */
    double shift_term_bound = 0;
};

/**
 * Check test parameters, throwing `ConfigError` on the first violation.
 */
inline void validate(const TestParams& p) {
    if (!(p.eta > 0 && p.eta < 1)) {
        throw ConfigError("test params: eta must lie strictly inside (0, 1)");
    }
    if (!(p.c >= 0) || !std::isfinite(p.c)) {
        throw ConfigError("test params: c must be finite and non-negative");
    }
    if (p.n_A < 2 || p.n_B < 2 || p.n != p.n_A + p.n_B) {
        throw ConfigError("test params: need n_A >= 2, n_B >= 2, n = n_A + n_B");
    }
}

/**
 * Build `TestParams` matching a count matrix's group sizes.
 */
inline TestParams test_params_for(const CountMatrix& data, double eta, double c) {
    TestParams p;
    p.eta = eta;
    p.c = c;
    p.n = data.n();
    p.n_A = data.n_A;
    p.n_B = data.n_B;
    validate(p);
    return p;
}

/**
 * Variance-stabilizing transform of one gene: Y_i = 2 sqrt(X_ij) / sqrt(s_hat_i).
 *
 * @param data Count matrix.
 * @param s Positive scaling factors.
 * @param j Gene row index.
 * @return The n stabilized values; zero counts map to 0.
 */
inline std::vector<double> stabilize(const CountMatrix& data, const ScalingFactors& s, std::int64_t j) {
    if (j < 0 || j >= data.m()) {
        throw ConfigError("stabilize: gene index out of range");
    }
    if (s.s_hat.size() != static_cast<std::size_t>(data.n())) {
        throw ConfigError("stabilize: scaling factor count does not match sample count");
    }
    const std::int64_t n = data.n();
    const std::int64_t* x = data.row(j);
    std::vector<double> y(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const double s_i = s.s_hat[static_cast<std::size_t>(i)];
        if (!(s_i > 0)) {
            throw ConfigError("stabilize: scaling factors must be positive");
        }
        y[static_cast<std::size_t>(i)] = (2.0 * std::sqrt(static_cast<double>(x[i]))) / std::sqrt(s_i);
    }
    return y;
}

namespace internal {

/**
 * @brief Group means and pooled standard error of one stabilized gene.
 */
struct TwoGroupStats {
    double mean_a = 0;
    double mean_b = 0;
    /** sqrt of ss_A/(n_A(n_A-1)) + ss_B/(n_B(n_B-1)); exactly 0 iff both groups constant. */
    double sigma = 0;
};

// Single summation order (sample order within group) shared by every caller,
// so results are identical no matter how work is scheduled.
inline TwoGroupStats two_group_stats(const double* y, const Group* groups, std::int64_t n, std::int64_t n_A,
                                     std::int64_t n_B) {
    double sum_a = 0, sum_b = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        (groups[i] == Group::A ? sum_a : sum_b) += y[i];
    }
    TwoGroupStats st;
    st.mean_a = sum_a / static_cast<double>(n_A);
    st.mean_b = sum_b / static_cast<double>(n_B);
    double ss_a = 0, ss_b = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        if (groups[i] == Group::A) {
            const double d = y[i] - st.mean_a;
            ss_a += d * d;
        } else {
            const double d = y[i] - st.mean_b;
            ss_b += d * d;
        }
    }
    const double var = ss_a / static_cast<double>(n_A * (n_A - 1)) + ss_b / static_cast<double>(n_B * (n_B - 1));
    st.sigma = std::sqrt(var);
    return st;
}

}

/**
 * Pooled two-group standard-error estimate of a stabilized gene:
 * sqrt( sum_A (Y - Ybar_A)^2 / (n_A (n_A - 1)) + sum_B (Y - Ybar_B)^2 / (n_B (n_B - 1)) ).
 *
 * @param y Stabilized values.
 * @param groups Group label per sample (at least 2 per group).
 * @return The estimate; exactly 0 signals degenerate variance (both groups
 * constant), for which callers record no decision.
 */
inline double sigma_hat(const std::vector<double>& y, const std::vector<Group>& groups) {
    if (y.size() != groups.size() || y.empty()) {
        throw ConfigError("sigma_hat: values and group labels must have equal non-zero length");
    }
    std::int64_t n_A = 0, n_B = 0;
    for (Group g : groups) {
        (g == Group::A ? n_A : n_B) += 1;
    }
    if (n_A < 2 || n_B < 2) {
        throw ConfigError("sigma_hat: need at least 2 samples per group");
    }
    return internal::two_group_stats(y.data(), groups.data(), static_cast<std::int64_t>(y.size()), n_A, n_B).sigma;
}

/**
 * The statistic T = (Ybar_A - Ybar_B) / sigma. Antisymmetric under swapping
 * the group labels and invariant under adding a constant to all values.
 *
 * @param y Stabilized values.
 * @param groups Group label per sample.
 * @param sigma Positive pooled standard error.
 * @return T.
 */
inline double t_statistic(const std::vector<double>& y, const std::vector<Group>& groups, double sigma) {
    if (!(sigma > 0)) {
        throw ConfigError("t_statistic: need sigma > 0");
    }
    if (y.size() != groups.size() || y.empty()) {
        throw ConfigError("t_statistic: values and group labels must have equal non-zero length");
    }
    std::int64_t n_A = 0, n_B = 0;
    for (Group g : groups) {
        (g == Group::A ? n_A : n_B) += 1;
    }
    const internal::TwoGroupStats st =
        internal::two_group_stats(y.data(), groups.data(), static_cast<std::int64_t>(y.size()), n_A, n_B);
    return (st.mean_a - st.mean_b) / sigma;
}

/**
 * Two-sided rejection threshold (1 + sqrt(c log n)) * Phi^-1(1 - eta/2),
 * with the natural logarithm.
 */
inline double rejection_threshold(const TestParams& params) {
    validate(params);
    const double inflate = 1.0 + std::sqrt(params.c * std::log(static_cast<double>(params.n)));
    return inflate * normal_quantile(1.0 - params.eta / 2.0);
}

/**
 * Test one gene outside the reference subset: stabilize, estimate the pooled
 * standard error, form T, and compare |T| to the inflated quantile.
 *
 * @param data Count matrix.
 * @param s Scaling factors estimated on a subset not containing `j`.
 * @param j Gene row index.
 * @param params Test parameters matching the matrix's group sizes.
 * @return The outcome, or `std::nullopt` when the variance estimate is
 * degenerate (no decision; counted in neither direction).
 *
 * Throws `ConfigError` if `j` lies inside the reference subset.
 */
inline std::optional<GeneTestOutcome> test_gene(const CountMatrix& data, const ScalingFactors& s, std::int64_t j,
                                                const TestParams& params) {
    validate(params);
    if (params.n != data.n() || params.n_A != data.n_A || params.n_B != data.n_B) {
        throw ConfigError("test_gene: params sizes do not match the data");
    }
    if (s.subset.contains(j)) {
        throw ConfigError("test_gene: gene " + std::to_string(j) + " lies inside the reference subset");
    }
    const std::vector<double> y = stabilize(data, s, j);
    const internal::TwoGroupStats st =
        internal::two_group_stats(y.data(), data.groups.data(), data.n(), data.n_A, data.n_B);
    if (!(st.sigma > 0)) {
        return std::nullopt;
    }
    GeneTestOutcome out;
    out.sigma_hat = st.sigma;
    out.t_value = (st.mean_a - st.mean_b) / st.sigma;
    out.rejected = std::abs(out.t_value) > rejection_threshold(params);
    return out;
}

/**
 * Closed-form bounds on the statistic's error terms under estimated scaling,
 * each holding with probability at least 1 - 5 n^(-c); asymptotic constant
 * factors are evaluated as exactly 1.
 *
 * The variance-ratio bound is (1 + sqrt(c log n)) (1 + 2 dev) with dev the
 * scaling deviation bound; the noise-remainder bound carries the factor
 * (1 + 2 sqrt(c log n) + 2 c log n); the shift-remainder bound carries
 * (sqrt(mu_A) + sqrt(mu_B))^2 * max(n/n_A, n/n_B).
 *
 * @param sum_mu_S Total expected intensity of the reference subset, > 0.
 * @param rho_bar_S Intensity-weighted mean overdispersion of the subset, >= 0.
 * @param s_max Largest scaling factor, >= 0.
 * @param mu_A_j Expected intensity of the tested gene in group A, >= 0.
 * @param mu_B_j Expected intensity of the tested gene in group B, >= 0.
 * @param n Total sample count, >= 2.
 * @param n_A Group A size, >= 1.
 * @param n_B Group B size, >= 1.
 * @param c Probability exponent, >= 0.
 * @return All three bounds.
 */
inline TStatErrorBounds t_statistic_error_bounds(double sum_mu_S, double rho_bar_S, double s_max, double mu_A_j,
                                                 double mu_B_j, std::int64_t n, std::int64_t n_A, std::int64_t n_B,
                                                 double c) {
    if (!(mu_A_j >= 0) || !(mu_B_j >= 0)) {
        throw ConfigError("error bounds: gene intensities must be non-negative");
    }
    if (n_A < 1 || n_B < 1 || n != n_A + n_B) {
        throw ConfigError("error bounds: need n_A >= 1, n_B >= 1, n = n_A + n_B");
    }
    const double dev = scaling_deviation_bound(sum_mu_S, rho_bar_S, s_max, n, c);
    const double log_n = std::log(static_cast<double>(n));
    const double x = c * log_n;
    const double overdisp = (1.0 + s_max * rho_bar_S) / sum_mu_S;

    TStatErrorBounds out;
    out.variance_ratio_bound = (1.0 + std::sqrt(x)) * (1.0 + 2.0 * dev);
    out.noise_term_bound = 2.0 * (1.0 + 2.0 * std::sqrt(x) + 2.0 * x) * (1.0 + c) * overdisp * log_n;
    const double root_sum = std::sqrt(mu_A_j) + std::sqrt(mu_B_j);
    const double size_factor = std::max(static_cast<double>(n) / static_cast<double>(n_A),
                                        static_cast<double>(n) / static_cast<double>(n_B));
    out.shift_term_bound = 2.0 * (1.0 + c) * root_sum * root_sum * overdisp * size_factor * log_n;
    return out;
}

}

#endif
