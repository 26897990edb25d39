#ifndef RANDDE_BASELINES_HPP
#define RANDDE_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "count_matrix.hpp"
#include "errors.hpp"
#include "gene_test.hpp"
#include "normal.hpp"
#include "scaling.hpp"

/**
 * @file baselines.hpp
 *
 * @brief Comparator scaling estimators (total count, upper quartile, trimmed
 * mean of M values) and a Holm-corrected detection pass built on them.
 *
 * Each estimator produces one global set of per-sample factors, every gene is
 * tested once against it, and two-sided normal p-values go through Holm
 * step-down. This is the conventional single-normalization pipeline the
 * randomized detector is compared against.
 */

namespace randde {

/**
 * @brief Choice of comparator scaling estimator.
 */
struct BaselineMethod {
    enum class Kind : std::uint8_t {
        /** Factors proportional to library size (total counts). */
        TotalCount,
        /** Factors proportional to a quantile of each sample's nonzero counts. */
        UpperQuartile,
        /** Factors from a doubly trimmed weighted mean of log-ratios versus a
         * reference sample. */
        TrimmedMeanM,
    };

    Kind kind = Kind::TrimmedMeanM;
    /** Quantile level (UpperQuartile). */
    double q = 0.75;
    /** Per-side trim fraction on log-ratios (TrimmedMeanM). */
    double trim_m = 0.30;
    /** Per-side trim fraction on mean log-intensity (TrimmedMeanM). */
    double trim_a = 0.05;

    static BaselineMethod total_count() {
        BaselineMethod b;
        b.kind = Kind::TotalCount;
        return b;
    }
    static BaselineMethod upper_quartile(double q = 0.75) {
        BaselineMethod b;
        b.kind = Kind::UpperQuartile;
        b.q = q;
        return b;
    }
    static BaselineMethod trimmed_mean_m(double trim_m = 0.30, double trim_a = 0.05) {
        BaselineMethod b;
        b.kind = Kind::TrimmedMeanM;
        b.trim_m = trim_m;
        b.trim_a = trim_a;
        return b;
    }
};

/**
 * @brief Per-gene outcome of a baseline detection pass.
 */
struct BaselineGeneResult {
    std::int64_t gene_index = 0;
    /** Statistic under the baseline factors (0 when undecided). */
    double t_value = 0;
    /** Two-sided normal p-value (1 when undecided). */
    double p_value = 1;
    /** Whether the single test rejected at the unadjusted level. */
    bool single_test_rejected = false;
    /** Whether Holm step-down declared the gene. */
    bool detected = false;
    /** False when the variance estimate was degenerate. */
    bool decided = false;
};

/**
 * @brief Full outcome of a baseline detection pass.
 */
struct BaselineResult {
    /** Per-gene results in row order. */
    std::vector<BaselineGeneResult> genes;
    /** Declared gene rows in increasing p-value order. */
    std::vector<std::int64_t> detected;
    /** The factors every test used. */
    ScalingFactors factors;
};

inline void validate(const BaselineMethod& method) {
    if (!(method.q > 0 && method.q < 1)) {
        throw ConfigError("baseline: quantile level must lie strictly inside (0, 1)");
    }
    if (!(method.trim_m >= 0 && method.trim_m < 0.5) || !(method.trim_a >= 0 && method.trim_a < 0.5)) {
        throw ConfigError("baseline: trim fractions must lie inside [0, 0.5)");
    }
}

namespace internal {

// Linear-interpolation quantile of the sorted nonzero counts of one sample.
inline double nonzero_quantile(const CountMatrix& data, std::int64_t sample, double q) {
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(data.m()));
    for (std::int64_t j = 0; j < data.m(); ++j) {
        const std::int64_t v = data.at(j, sample);
        if (v > 0) {
            values.push_back(static_cast<double>(v));
        }
    }
    if (values.empty()) {
        throw ConfigError("baseline: sample " + data.sample_ids[static_cast<std::size_t>(sample)]
                          + " has no nonzero counts");
    }
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) {
        return values.back();
    }
    return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

// Keep-mask of ranks after trimming a fraction off each end of `values`;
// ties are broken by index so the mask is deterministic.
inline std::vector<bool> trim_mask(const std::vector<double>& values, double trim) {
    const std::int64_t n = static_cast<std::int64_t>(values.size());
    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), std::int64_t{0});
    std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        const double va = values[static_cast<std::size_t>(a)];
        const double vb = values[static_cast<std::size_t>(b)];
        if (va != vb) {
            return va < vb;
        }
        return a < b;
    });
    const std::int64_t cut = static_cast<std::int64_t>(std::floor(static_cast<double>(n) * trim));
    std::vector<bool> keep(static_cast<std::size_t>(n), false);
    for (std::int64_t rank = cut; rank < n - cut; ++rank) {
        keep[static_cast<std::size_t>(order[static_cast<std::size_t>(rank)])] = true;
    }
    return keep;
}

// Trimmed weighted mean of log-ratios of sample `i` against sample `ref`,
// exponentiated back to a multiplicative factor.
inline double tmm_factor(const CountMatrix& data, const std::vector<double>& lib_size, std::int64_t i,
                         std::int64_t ref, double trim_m, double trim_a) {
    std::vector<double> m_values;
    std::vector<double> a_values;
    std::vector<double> weights;
    for (std::int64_t j = 0; j < data.m(); ++j) {
        const std::int64_t xi = data.at(j, i);
        const std::int64_t xr = data.at(j, ref);
        if (xi <= 0 || xr <= 0) {
            continue;
        }
        const double pi = static_cast<double>(xi) / lib_size[static_cast<std::size_t>(i)];
        const double pr = static_cast<double>(xr) / lib_size[static_cast<std::size_t>(ref)];
        m_values.push_back(std::log(pi / pr));
        a_values.push_back(0.5 * std::log(pi * pr));
        const double wi = (lib_size[static_cast<std::size_t>(i)] - static_cast<double>(xi))
                          / (lib_size[static_cast<std::size_t>(i)] * static_cast<double>(xi));
        const double wr = (lib_size[static_cast<std::size_t>(ref)] - static_cast<double>(xr))
                          / (lib_size[static_cast<std::size_t>(ref)] * static_cast<double>(xr));
        weights.push_back(1.0 / (wi + wr));
    }
    if (m_values.empty()) {
        throw ConfigError("baseline: samples " + data.sample_ids[static_cast<std::size_t>(i)] + " and "
                          + data.sample_ids[static_cast<std::size_t>(ref)] + " share no co-expressed genes");
    }
    const std::vector<bool> keep_m = trim_mask(m_values, trim_m);
    const std::vector<bool> keep_a = trim_mask(a_values, trim_a);
    double num = 0, den = 0;
    for (std::size_t g = 0; g < m_values.size(); ++g) {
        if (keep_m[g] && keep_a[g]) {
            num += weights[g] * m_values[g];
            den += weights[g];
        }
    }
    if (den <= 0) {
        throw ConfigError("baseline: no genes survive the trims between samples "
                          + data.sample_ids[static_cast<std::size_t>(i)] + " and "
                          + data.sample_ids[static_cast<std::size_t>(ref)]);
    }
    return std::exp(num / den);
}

}

/**
 * Estimate one global set of scaling factors with a comparator method.
 *
 * TotalCount: factors proportional to library size. UpperQuartile: factors
 * proportional to the q-quantile of each sample's nonzero counts.
 * TrimmedMeanM: factors proportional to library size times the exponentiated
 * doubly trimmed weighted mean of per-gene log-ratios against a reference
 * sample (the one whose nonzero upper quartile is closest to the average).
 * All factors are renormalized to sum to n.
 *
 * @param data Count matrix with no all-zero sample.
 * @param method Estimator and its parameters.
 * @return Factors with an empty reference-subset provenance.
 */
inline ScalingFactors baseline_scaling(const CountMatrix& data, const BaselineMethod& method) {
    validate(data);
    validate(method);
    const std::int64_t n = data.n();
    std::vector<double> lib_size(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        std::int64_t total = 0;
        for (std::int64_t j = 0; j < data.m(); ++j) {
            total += data.at(j, i);
        }
        if (total == 0) {
            throw ConfigError("baseline: sample " + data.sample_ids[static_cast<std::size_t>(i)]
                              + " has no reads");
        }
        lib_size[static_cast<std::size_t>(i)] = static_cast<double>(total);
    }

    std::vector<double> raw(static_cast<std::size_t>(n), 0.0);
    switch (method.kind) {
    case BaselineMethod::Kind::TotalCount:
        raw = lib_size;
        break;
    case BaselineMethod::Kind::UpperQuartile:
        for (std::int64_t i = 0; i < n; ++i) {
            raw[static_cast<std::size_t>(i)] = internal::nonzero_quantile(data, i, method.q);
        }
        break;
    case BaselineMethod::Kind::TrimmedMeanM: {
        std::vector<double> uq(static_cast<std::size_t>(n));
        double mean_uq = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            uq[static_cast<std::size_t>(i)] =
                internal::nonzero_quantile(data, i, 0.75) / lib_size[static_cast<std::size_t>(i)];
            mean_uq += uq[static_cast<std::size_t>(i)];
        }
        mean_uq /= static_cast<double>(n);
        std::int64_t ref = 0;
        for (std::int64_t i = 1; i < n; ++i) {
            if (std::abs(uq[static_cast<std::size_t>(i)] - mean_uq) < std::abs(uq[static_cast<std::size_t>(ref)] - mean_uq)) {
                ref = i;
            }
        }
        for (std::int64_t i = 0; i < n; ++i) {
            const double f = (i == ref) ? 1.0
                                        : internal::tmm_factor(data, lib_size, i, ref, method.trim_m, method.trim_a);
            raw[static_cast<std::size_t>(i)] = lib_size[static_cast<std::size_t>(i)] * f;
        }
        break;
    }
    }

    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    ScalingFactors out;
    out.s_hat.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        out.s_hat[static_cast<std::size_t>(i)] = static_cast<double>(n) * raw[static_cast<std::size_t>(i)] / total;
    }
    return out;
}

/**
 * Single-normalization detection: estimate factors once, test every gene,
 * and apply Holm step-down at `alpha` to the two-sided normal p-values
 * p_j = 2 (1 - Phi(|T_j|)).
 *
 * Genes with degenerate variance receive p = 1 and are never declared. The
 * unadjusted per-test rejection (|T| above the params threshold) is reported
 * alongside for diagnostic comparison.
 *
 * @param data Count matrix.
 * @param method Scaling estimator.
 * @param params Test parameters (comparators conventionally run with c = 0).
 * @param alpha Family-wise level of the Holm pass.
 * @return Per-gene results and the declared set.
 */
inline BaselineResult baseline_detect(const CountMatrix& data, const BaselineMethod& method, const TestParams& params,
                                      double alpha) {
    if (!(alpha > 0 && alpha < 1)) {
        throw ConfigError("baseline: alpha must lie strictly inside (0, 1)");
    }
    BaselineResult result;
    result.factors = baseline_scaling(data, method);

    const std::int64_t m = data.m();
    result.genes.resize(static_cast<std::size_t>(m));
    for (std::int64_t j = 0; j < m; ++j) {
        BaselineGeneResult& g = result.genes[static_cast<std::size_t>(j)];
        g.gene_index = j;
        const std::optional<GeneTestOutcome> outcome = test_gene(data, result.factors, j, params);
        if (!outcome) {
            continue;
        }
        g.decided = true;
        g.t_value = outcome->t_value;
        g.single_test_rejected = outcome->rejected;
        g.p_value = 2.0 * (1.0 - normal_cdf(std::abs(outcome->t_value)));
    }

    std::vector<std::int64_t> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), std::int64_t{0});
    std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        const double pa = result.genes[static_cast<std::size_t>(a)].p_value;
        const double pb = result.genes[static_cast<std::size_t>(b)].p_value;
        if (pa != pb) {
            return pa < pb;
        }
        return a < b;
    });
    for (std::int64_t rank = 1; rank <= m; ++rank) {
        const std::int64_t j = order[static_cast<std::size_t>(rank - 1)];
        const double threshold = alpha / static_cast<double>(m - rank + 1);
        if (!(result.genes[static_cast<std::size_t>(j)].p_value < threshold)) {
            break;
        }
        result.genes[static_cast<std::size_t>(j)].detected = true;
        result.detected.push_back(j);
    }
    return result;
}

}

#endif
