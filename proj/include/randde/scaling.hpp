#ifndef RANDDE_SCALING_HPP
#define RANDDE_SCALING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "count_matrix.hpp"
#include "errors.hpp"
#include "rng.hpp"

/**
 * @file scaling.hpp
 *
 * @brief Scaling factors from reference subsets, plug-in gene intensities,
 * subset-drawing strategies, and the scaling deviation diagnostic.
 *
 * A reference subset S of genes fixes the per-sample scaling estimates
 * s_hat_i = n * sum_{j in S} X_ij / sum_i sum_{j in S} X_ij, which always sum
 * to n. Subsets are drawn uniformly at a fixed size, uniformly from a pool of
 * high-intensity genes, or grown until their estimated total intensity mass
 * reaches a target.
 */

namespace randde {

/**
 * @brief Set of gene indices used as the normalization reference.
 */
struct NormalizationSubset {
    /** Sorted distinct row indices into the count matrix. */
    std::vector<std::int64_t> gene_indices;

    /** Subset size. */
    std::int64_t size() const { return static_cast<std::int64_t>(gene_indices.size()); }
    /** Membership test by binary search. */
    bool contains(std::int64_t j) const {
        return std::binary_search(gene_indices.begin(), gene_indices.end(), j);
    }
};

/**
 * @brief Per-sample scaling estimates together with the subset they came from.
 */
struct ScalingFactors {
    /** Positive per-sample factors summing to n. */
    std::vector<double> s_hat;
    /** Subset the factors were estimated on. */
    NormalizationSubset subset;
};

/**
 * @brief How reference subsets are drawn.
 */
struct SubsetStrategy {
    enum class Mode : std::uint8_t {
        /** Uniform subset of fixed size k. */
        FixedK,
        /** Uniform subset of size k from genes with estimated intensity >= mu0. */
        MinIntensity,
        /** Genes added uniformly until estimated intensity mass reaches M0. */
        GrowToMass,
    };

    Mode mode = Mode::FixedK;
    /** Subset size (FixedK, MinIntensity). */
    std::int64_t k = 10;
    /** Intensity floor (MinIntensity). */
    double mu0 = 0;
    /** Intensity-mass target (GrowToMass). */
    double M0 = 0;

    static SubsetStrategy fixed_k(std::int64_t k) {
        SubsetStrategy s;
        s.mode = Mode::FixedK;
        s.k = k;
        return s;
    }
    static SubsetStrategy min_intensity(std::int64_t k, double mu0) {
        SubsetStrategy s;
        s.mode = Mode::MinIntensity;
        s.k = k;
        s.mu0 = mu0;
        return s;
    }
    static SubsetStrategy grow_to_mass(double M0) {
        SubsetStrategy s;
        s.mode = Mode::GrowToMass;
        s.M0 = M0;
        return s;
    }
};

/**
 * Check that a subset is sorted, duplicate-free, non-empty, and within [0, m).
 */
inline void validate(const NormalizationSubset& subset, std::int64_t m) {
    if (subset.gene_indices.empty()) {
        throw ConfigError("subset: must be non-empty");
    }
    std::int64_t prev = -1;
    for (std::int64_t j : subset.gene_indices) {
        if (j < 0 || j >= m) {
            throw ConfigError("subset: index " + std::to_string(j) + " outside [0, " + std::to_string(m) + ")");
        }
        if (j <= prev) {
            throw ConfigError("subset: indices must be strictly increasing");
        }
        prev = j;
    }
}

/**
 * Estimate per-sample scaling factors on a reference subset.
 *
 * @param data Count matrix.
 * @param subset Reference genes.
 * @return s_hat_i = n * T_i / T where T_i is sample i's total over the subset
 * and T = sum_i T_i; the factors sum to n up to rounding.
 *
 * Throws `DegenerateSubsetError` when some sample has zero total on the
 * subset (the factor would be 0 and downstream square-root transforms would
 * divide by it); callers drawing subsets at random discard and redraw.
 */
inline ScalingFactors estimate_scaling(const CountMatrix& data, const NormalizationSubset& subset) {
    validate(subset, data.m());
    const std::int64_t n = data.n();
    std::vector<std::int64_t> per_sample(static_cast<std::size_t>(n), 0);
    for (std::int64_t j : subset.gene_indices) {
        const std::int64_t* x = data.row(j);
        for (std::int64_t i = 0; i < n; ++i) {
            per_sample[static_cast<std::size_t>(i)] += x[i];
        }
    }
    std::int64_t total = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        if (per_sample[static_cast<std::size_t>(i)] == 0) {
            throw DegenerateSubsetError("sample " + data.sample_ids[static_cast<std::size_t>(i)]
                                        + " has zero total count on the reference subset");
        }
        total += per_sample[static_cast<std::size_t>(i)];
    }
    ScalingFactors out;
    out.subset = subset;
    out.s_hat.resize(static_cast<std::size_t>(n));
    const double scale = static_cast<double>(n) / static_cast<double>(total);
    for (std::int64_t i = 0; i < n; ++i) {
        out.s_hat[static_cast<std::size_t>(i)] = scale * static_cast<double>(per_sample[static_cast<std::size_t>(i)]);
    }
    return out;
}

namespace internal {

// Plug-in intensity of gene j given raw per-sample factors.
inline double gene_intensity(const CountMatrix& data, const std::vector<double>& s_hat, std::int64_t j) {
    const std::int64_t n = data.n();
    const std::int64_t* x = data.row(j);
    double acc = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        acc += std::sqrt(static_cast<double>(x[i]) / s_hat[static_cast<std::size_t>(i)]);
    }
    const double mean_root = acc / static_cast<double>(n);
    return mean_root * mean_root;
}

}

/**
 * Plug-in intensity estimate of one gene: the squared mean of the per-sample
 * square roots of rescaled counts, ((1/n) sum_i sqrt(X_ij / s_hat_i))^2. For
 * constant X_ij = mu at unit factors this returns exactly mu.
 *
 * @param data Count matrix.
 * @param s Scaling factors (all positive).
 * @param j Gene row index.
 * @return The intensity estimate (0 when the gene is all zero).
 */
inline double estimate_gene_intensity(const CountMatrix& data, const ScalingFactors& s, std::int64_t j) {
    if (j < 0 || j >= data.m()) {
        throw ConfigError("intensity: gene index out of range");
    }
    if (s.s_hat.size() != static_cast<std::size_t>(data.n())) {
        throw ConfigError("intensity: scaling factor count does not match sample count");
    }
    for (double v : s.s_hat) {
        if (!(v > 0)) {
            throw ConfigError("intensity: scaling factors must be positive");
        }
    }
    return internal::gene_intensity(data, s.s_hat, j);
}

/**
 * Plug-in intensities of every gene at unit scaling factors. Used to seed the
 * intensity-aware subset strategies before any reference subset exists.
 */
inline std::vector<double> unit_scaling_intensities(const CountMatrix& data) {
    const std::vector<double> ones(static_cast<std::size_t>(data.n()), 1.0);
    std::vector<double> out(static_cast<std::size_t>(data.m()));
    for (std::int64_t j = 0; j < data.m(); ++j) {
        out[static_cast<std::size_t>(j)] = internal::gene_intensity(data, ones, j);
    }
    return out;
}

namespace internal {

// Uniform k-subset of {0, ..., pool_size - 1} by Floyd's algorithm; sorted.
inline std::vector<std::int64_t> sample_sorted(std::int64_t pool_size, std::int64_t k, RngStream& rng) {
    std::vector<std::int64_t> out;
    out.reserve(static_cast<std::size_t>(k));
    for (std::int64_t j = pool_size - k; j < pool_size; ++j) {
        const std::int64_t t = static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(j) + 1));
        const auto it = std::lower_bound(out.begin(), out.end(), t);
        if (it != out.end() && *it == t) {
            out.push_back(j);
        } else {
            out.insert(it, t);
        }
    }
    return out;
}

}

/**
 * @brief Prepared drawer of reference subsets under one strategy.
 *
 * Construction validates the strategy against the data and precomputes the
 * eligible pool (or intensity table) once; `draw` is then cheap and uses only
 * the provided stream, so concurrent draws with independent streams are
 * deterministic.
 */
class SubsetSampler {
public:
    SubsetSampler(const CountMatrix& data, const SubsetStrategy& strategy) : data_(&data), strategy_(strategy) {
        const std::int64_t m = data.m();
        switch (strategy.mode) {
        case SubsetStrategy::Mode::FixedK:
            if (strategy.k < 1 || strategy.k > m - 1) {
                throw ConfigError("subset strategy: need 1 <= k <= m - 1 (k=" + std::to_string(strategy.k)
                                  + ", m=" + std::to_string(m) + ")");
            }
            break;
        case SubsetStrategy::Mode::MinIntensity: {
            if (strategy.k < 1) {
                throw ConfigError("subset strategy: need k >= 1");
            }
            if (!(strategy.mu0 > 0)) {
                throw ConfigError("subset strategy: need mu0 > 0");
            }
            const std::vector<double> mu = unit_scaling_intensities(data);
            for (std::int64_t j = 0; j < m; ++j) {
                if (mu[static_cast<std::size_t>(j)] >= strategy.mu0) {
                    pool_.push_back(j);
                }
            }
            if (static_cast<std::int64_t>(pool_.size()) < strategy.k) {
                throw InfeasibleDesignError("subset strategy: only " + std::to_string(pool_.size())
                                            + " genes reach intensity " + std::to_string(strategy.mu0)
                                            + ", need k=" + std::to_string(strategy.k));
            }
            break;
        }
        case SubsetStrategy::Mode::GrowToMass: {
            if (!(strategy.M0 > 0)) {
                throw ConfigError("subset strategy: need M0 > 0");
            }
            intensities_ = unit_scaling_intensities(data);
            const double total = std::accumulate(intensities_.begin(), intensities_.end(), 0.0);
            if (total < strategy.M0) {
                throw InfeasibleDesignError("subset strategy: total estimated intensity "
                                            + std::to_string(total) + " below mass target "
                                            + std::to_string(strategy.M0));
            }
            break;
        }
        }
    }

    /** Draw one subset; consumes only `rng`. */
    NormalizationSubset draw(RngStream& rng) const {
        NormalizationSubset out;
        const std::int64_t m = data_->m();
        switch (strategy_.mode) {
        case SubsetStrategy::Mode::FixedK:
            out.gene_indices = internal::sample_sorted(m, strategy_.k, rng);
            break;
        case SubsetStrategy::Mode::MinIntensity: {
            const std::vector<std::int64_t> picks =
                internal::sample_sorted(static_cast<std::int64_t>(pool_.size()), strategy_.k, rng);
            out.gene_indices.reserve(picks.size());
            for (std::int64_t p : picks) {
                out.gene_indices.push_back(pool_[static_cast<std::size_t>(p)]);
            }
            break;
        }
        case SubsetStrategy::Mode::GrowToMass: {
            std::vector<std::int64_t> idx(static_cast<std::size_t>(m));
            std::iota(idx.begin(), idx.end(), std::int64_t{0});
            double mass = 0;
            std::int64_t t = 0;
            while (mass < strategy_.M0 && t < m) {
                const std::int64_t u =
                    static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(m - t)));
                std::swap(idx[static_cast<std::size_t>(t)], idx[static_cast<std::size_t>(t + u)]);
                mass += intensities_[static_cast<std::size_t>(idx[static_cast<std::size_t>(t)])];
                ++t;
            }
            out.gene_indices.assign(idx.begin(), idx.begin() + t);
            std::sort(out.gene_indices.begin(), out.gene_indices.end());
            break;
        }
        }
        return out;
    }

    /** Largest subset size the strategy can produce (bounds the avoidance rate). */
    std::int64_t max_size() const {
        if (strategy_.mode != SubsetStrategy::Mode::GrowToMass) {
            return strategy_.k;
        }
        // Worst case: mass accumulates from the smallest intensities upward.
        std::vector<double> sorted = intensities_;
        std::sort(sorted.begin(), sorted.end());
        double mass = 0;
        std::int64_t size = 0;
        for (double v : sorted) {
            if (mass >= strategy_.M0) {
                break;
            }
            mass += v;
            ++size;
        }
        return std::max<std::int64_t>(size, 1);
    }

private:
    const CountMatrix* data_;
    SubsetStrategy strategy_;
    std::vector<std::int64_t> pool_;
    std::vector<double> intensities_;
};

/**
 * Draw one reference subset under a strategy.
 *
 * @param data Count matrix.
 * @param strategy Drawing mode and its parameter.
 * @param rng Stream consumed by the draw.
 * @return Sorted subset; FixedK and MinIntensity produce exactly k genes,
 * GrowToMass stops as soon as the accumulated intensity mass reaches M0.
 *
 * Throws `ConfigError` for invalid strategy parameters and
 * `InfeasibleDesignError` when the eligible pool is smaller than k or the
 * total mass cannot reach M0.
 */
inline NormalizationSubset grow_subset(const CountMatrix& data, const SubsetStrategy& strategy, RngStream& rng) {
    return SubsetSampler(data, strategy).draw(rng);
}

/**
 * High-probability bound on |sqrt(s_i / s_hat_i) - 1| for every sample,
 * sqrt(2 (1 + c) (1 + s_max * rho_bar_S) / sum_mu_S * log(n) / n), holding
 * with probability at least 1 - 4 n^(-c). The constant factor multiplying the
 * leading term is asymptotic (treated as exactly 1 at finite n).
 *
 * @param sum_mu_S Total expected intensity of the reference subset, > 0.
 * @param rho_bar_S Intensity-weighted mean overdispersion over the subset, >= 0.
 * @param s_max Largest per-sample scaling factor, >= 0.
 * @param n Sample count, >= 2.
 * @param c Probability exponent, >= 0.
 * @return The deviation bound.
 */
inline double scaling_deviation_bound(double sum_mu_S, double rho_bar_S, double s_max, std::int64_t n, double c) {
    if (!(sum_mu_S > 0)) {
        throw ConfigError("deviation bound: need sum_mu_S > 0");
    }
    if (!(rho_bar_S >= 0) || !(s_max >= 0) || !(c >= 0)) {
        throw ConfigError("deviation bound: rho_bar_S, s_max, c must be non-negative");
    }
    if (n < 2) {
        throw ConfigError("deviation bound: need n >= 2");
    }
    const double nn = static_cast<double>(n);
    return std::sqrt(2.0 * (1.0 + c) * (1.0 + s_max * rho_bar_S) / sum_mu_S * std::log(nn) / nn);
}

}

#endif
