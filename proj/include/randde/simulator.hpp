#ifndef RANDDE_SIMULATOR_HPP
#define RANDDE_SIMULATOR_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "count_matrix.hpp"
#include "detector.hpp"
#include "errors.hpp"
#include "normal.hpp"
#include "rng.hpp"

/**
 * @file simulator.hpp
 *
 * @brief Synthetic two-group count generation and the standard experiments.
 *
 * Counts follow X_ij ~ Poisson(s_i mu_j) in group A and Poisson(s_i mu_j
 * phi_j) in group B, optionally overdispersed by a gamma mixture (negative
 * binomial with variance mean (1 + mean / gamma_j)). The null experiment
 * measures the family-wise error rate under phi_j = 1; the power experiment
 * plants phi_j = 1 + a / sqrt(j) on the first m1 genes and reports per-gene
 * detection rates alongside the detectability thresholds phi_low / phi_up.
 */

namespace randde {

/**
 * @brief Ground truth of a synthetic dataset.
 */
struct SimulationScenario {
    /** Samples in total and per group. */
    std::int64_t n = 12;
    std::int64_t n_A = 6;
    std::int64_t n_B = 6;
    /** Genes. */
    std::int64_t m = 500;
    /** Count of differentially expressed genes (a prefix of the rows). */
    std::int64_t m1 = 0;
    /** Base intensity mu_j of every gene (group A mean at unit scaling). */
    std::vector<double> mu;
    /** Fold change phi_j; group B mean is mu_j phi_j. */
    std::vector<double> fold;
    /** True per-sample scaling factors, summing to n. */
    std::vector<double> s;
    /** Per-gene overdispersion gamma_j; infinity selects Poisson. */
    std::vector<double> gamma;
    /** Replicates an experiment runs. */
    std::int64_t replicates = 100;
    /** Master seed for generation. */
    std::uint64_t seed = 0;
};

/**
 * @brief Aggregate outcome of a simulation experiment.
 */
struct ExperimentResult {
    /** Fraction of replicates with at least one false detection. */
    double fwer = 0;
    /** Mean count of false detections per replicate. */
    double avg_false = 0;
    /** Mean count of true detections per replicate. */
    double avg_true = 0;
    /** Per-gene detection frequency across replicates. */
    std::vector<double> detection_rate;
    /** Detectability thresholds (power experiments; 0 otherwise). */
    double phi_low = 0;
    double phi_up = 0;
    /** Largest 1-based DE index with phi_j >= phi_up (0 when none). */
    std::int64_t phi_up_crossover = 0;
    std::int64_t replicates = 0;
    /** Replicates whose detection run hit the pass limit. */
    std::int64_t truncated_runs = 0;
    /** Wall-clock duration of the experiment. */
    double runtime_seconds = 0;
};

/**
 * Check scenario invariants, throwing `ConfigError` on the first violation.
 */
inline void validate(const SimulationScenario& sc) {
    if (sc.m < 2 || sc.n_A < 2 || sc.n_B < 2 || sc.n != sc.n_A + sc.n_B) {
        throw ConfigError("scenario: need m >= 2, n_A >= 2, n_B >= 2, n = n_A + n_B");
    }
    if (sc.m1 < 0 || sc.m1 > sc.m) {
        throw ConfigError("scenario: need 0 <= m1 <= m");
    }
    if (sc.replicates < 1) {
        throw ConfigError("scenario: need replicates >= 1");
    }
    if (sc.mu.size() != static_cast<std::size_t>(sc.m) || sc.fold.size() != static_cast<std::size_t>(sc.m)
        || sc.gamma.size() != static_cast<std::size_t>(sc.m) || sc.s.size() != static_cast<std::size_t>(sc.n)) {
        throw ConfigError("scenario: mu, fold, gamma must have length m and s length n");
    }
    for (double v : sc.mu) {
        if (!(v >= 0) || !std::isfinite(v)) {
            throw ConfigError("scenario: intensities must be finite and non-negative");
        }
    }
    for (double v : sc.fold) {
        if (!(v > 0) || !std::isfinite(v)) {
            throw ConfigError("scenario: fold changes must be finite and positive");
        }
    }
    for (double v : sc.gamma) {
        if (!(v > 0)) {
            throw ConfigError("scenario: dispersions must be positive (infinity selects Poisson)");
        }
    }
    double sum_s = 0;
    for (double v : sc.s) {
        if (!(v > 0) || !std::isfinite(v)) {
            throw ConfigError("scenario: scaling factors must be finite and positive");
        }
        sum_s += v;
    }
    if (std::abs(sum_s - static_cast<double>(sc.n)) > 1e-9 * static_cast<double>(sc.n)) {
        throw ConfigError("scenario: scaling factors must sum to n");
    }
}

/**
 * Scenario with every gene invariant: mu_j = mu0, phi_j = 1, unit scaling,
 * Poisson noise.
 */
inline SimulationScenario make_null_scenario(std::int64_t m, std::int64_t n_A, std::int64_t n_B, double mu0) {
    SimulationScenario sc;
    sc.m = m;
    sc.n_A = n_A;
    sc.n_B = n_B;
    sc.n = n_A + n_B;
    sc.m1 = 0;
    sc.mu.assign(static_cast<std::size_t>(m), mu0);
    sc.fold.assign(static_cast<std::size_t>(m), 1.0);
    sc.s.assign(static_cast<std::size_t>(sc.n), 1.0);
    sc.gamma.assign(static_cast<std::size_t>(m), std::numeric_limits<double>::infinity());
    validate(sc);
    return sc;
}

/**
 * Scenario planting phi_j = 1 + a / sqrt(j) on genes j = 1..m1 (1-based),
 * phi_j = 1 elsewhere; otherwise as the null scenario.
 */
inline SimulationScenario make_power_scenario(std::int64_t m, std::int64_t n_A, std::int64_t n_B, double mu0,
                                              double a, std::int64_t m1) {
    if (!(a > 0)) {
        throw ConfigError("scenario: need a > 0");
    }
    if (m1 < 1 || m1 > m) {
        throw ConfigError("scenario: need 1 <= m1 <= m");
    }
    SimulationScenario sc = make_null_scenario(m, n_A, n_B, mu0);
    sc.m1 = m1;
    for (std::int64_t j = 1; j <= m1; ++j) {
        sc.fold[static_cast<std::size_t>(j - 1)] = 1.0 + a / std::sqrt(static_cast<double>(j));
    }
    return sc;
}

namespace internal {

inline std::int64_t draw_count(RngStream& rng, double lambda, double gamma_j) {
    if (lambda <= 0) {
        return 0;
    }
    if (std::isinf(gamma_j)) {
        return static_cast<std::int64_t>(rng.poisson(lambda));
    }
    const double mixed = rng.gamma(gamma_j, lambda / gamma_j);
    return static_cast<std::int64_t>(rng.poisson(mixed));
}

}

/**
 * Generate one replicate of a scenario.
 *
 * Cell (i, j) is drawn from its own stream keyed by (seed, replicate_index,
 * cell), so the matrix is reproducible and independent of generation order.
 * Group A samples come first, then group B; gene ids are g1..gm, sample ids
 * a1..a{n_A}, b1..b{n_B}.
 *
 * @param sc Scenario (validated here).
 * @param replicate_index Replicate number, >= 0.
 * @return The synthetic count matrix.
 */
inline CountMatrix generate(const SimulationScenario& sc, std::int64_t replicate_index) {
    validate(sc);
    if (replicate_index < 0) {
        throw ConfigError("generate: need replicate_index >= 0");
    }
    CountMatrix data;
    data.n_A = sc.n_A;
    data.n_B = sc.n_B;
    data.sample_ids.reserve(static_cast<std::size_t>(sc.n));
    data.groups.reserve(static_cast<std::size_t>(sc.n));
    for (std::int64_t i = 0; i < sc.n_A; ++i) {
        data.sample_ids.push_back("a" + std::to_string(i + 1));
        data.groups.push_back(Group::A);
    }
    for (std::int64_t i = 0; i < sc.n_B; ++i) {
        data.sample_ids.push_back("b" + std::to_string(i + 1));
        data.groups.push_back(Group::B);
    }
    data.gene_ids.reserve(static_cast<std::size_t>(sc.m));
    data.counts.resize(static_cast<std::size_t>(sc.m) * static_cast<std::size_t>(sc.n));
    for (std::int64_t j = 0; j < sc.m; ++j) {
        data.gene_ids.push_back("g" + std::to_string(j + 1));
        const double mu_a = sc.mu[static_cast<std::size_t>(j)];
        const double mu_b = mu_a * sc.fold[static_cast<std::size_t>(j)];
        const double gamma_j = sc.gamma[static_cast<std::size_t>(j)];
        for (std::int64_t i = 0; i < sc.n; ++i) {
            const double mu_ij = (data.groups[static_cast<std::size_t>(i)] == Group::A) ? mu_a : mu_b;
            const double lambda = sc.s[static_cast<std::size_t>(i)] * mu_ij;
            const std::uint64_t cell = static_cast<std::uint64_t>(j) * static_cast<std::uint64_t>(sc.n)
                                       + static_cast<std::uint64_t>(i);
            RngStream rng = derive_stream(sc.seed, stream_tag::simulate,
                                          static_cast<std::uint64_t>(replicate_index), cell);
            data.counts[static_cast<std::size_t>(j * sc.n + i)] = internal::draw_count(rng, lambda, gamma_j);
        }
    }
    validate(data);
    return data;
}

/**
 * Detectability thresholds of the fold change at design (n, mu0, m, alpha, c):
 * phi_low/up = (1 -/+ |Phi^-1(alpha / 2m)| (1 + sqrt(c log n)) / sqrt(n mu0))^2.
 * Fold changes outside [phi_low, phi_up] are large enough for the single-gene
 * test to detect reliably.
 *
 * @return (phi_low, phi_up) with phi_low < 1 < phi_up for any nonzero shift.
 */
inline std::pair<double, double> phi_thresholds(std::int64_t n, double mu0, std::int64_t m, double alpha, double c) {
    if (n < 2 || !(mu0 > 0) || m < 1 || !(alpha > 0 && alpha < 1) || !(c >= 0)) {
        throw ConfigError("phi_thresholds: need n >= 2, mu0 > 0, m >= 1, alpha in (0,1), c >= 0");
    }
    const double q = alpha / (2.0 * static_cast<double>(m));
    const double magnitude = std::abs(normal_quantile(q));
    const double inflate = 1.0 + std::sqrt(c * std::log(static_cast<double>(n)));
    const double shift = magnitude * inflate / std::sqrt(static_cast<double>(n) * mu0);
    const double low = (1.0 - shift) * (1.0 - shift);
    const double up = (1.0 + shift) * (1.0 + shift);
    return {low, up};
}

namespace internal {

inline ExperimentResult run_experiment(const SimulationScenario& sc, const DetectorConfig& detector,
                                       std::int64_t replicates) {
    validate(sc);
    if (replicates < 1) {
        throw ConfigError("experiment: need replicates >= 1");
    }
    const auto start = std::chrono::steady_clock::now();

    ExperimentResult res;
    res.replicates = replicates;
    res.detection_rate.assign(static_cast<std::size_t>(sc.m), 0.0);

    std::int64_t erring = 0;
    std::int64_t total_false = 0;
    std::int64_t total_true = 0;
    for (std::int64_t rep = 0; rep < replicates; ++rep) {
        const CountMatrix data = generate(sc, rep);
        DetectorConfig cfg = detector;
        cfg.seed = derive_stream(detector.seed, stream_tag::replicate_run, static_cast<std::uint64_t>(rep)).next_u64();
        const DetectionReport report = detect(data, cfg);
        if (report.truncated) {
            ++res.truncated_runs;
        }
        std::int64_t n_false = 0;
        std::int64_t n_true = 0;
        for (const DetectedGene& g : report.detected) {
            // Synthetic ids are g<row+1>; recover the row to index ground truth.
            const std::int64_t row = std::stoll(g.gene_id.substr(1)) - 1;
            res.detection_rate[static_cast<std::size_t>(row)] += 1.0;
            if (sc.fold[static_cast<std::size_t>(row)] == 1.0) {
                ++n_false;
            } else {
                ++n_true;
            }
        }
        if (n_false > 0) {
            ++erring;
        }
        total_false += n_false;
        total_true += n_true;
    }
    for (double& v : res.detection_rate) {
        v /= static_cast<double>(replicates);
    }
    res.fwer = static_cast<double>(erring) / static_cast<double>(replicates);
    res.avg_false = static_cast<double>(total_false) / static_cast<double>(replicates);
    res.avg_true = static_cast<double>(total_true) / static_cast<double>(replicates);
    res.runtime_seconds =
        std::chrono::duration_cast<std::chrono::duration<double>>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}

/**
 * Global-null experiment: generate phi_j = 1 data, run the detector, and
 * count any detection as a family-wise error.
 *
 * @param sc Null scenario (every fold must equal 1).
 * @param detector Detector configuration; its seed drives per-replicate runs.
 * @param replicates Replicates to aggregate.
 * @return FWER, average false detections, and per-gene rates.
 */
inline ExperimentResult run_null_experiment(const SimulationScenario& sc, const DetectorConfig& detector,
                                            std::int64_t replicates) {
    for (double v : sc.fold) {
        if (v != 1.0) {
            throw ConfigError("null experiment: every fold change must equal 1");
        }
    }
    return internal::run_experiment(sc, detector, replicates);
}

/**
 * Power experiment: plant phi_j = 1 + a / sqrt(j) on genes 1..m1 of the
 * scenario, run the detector per replicate, and report per-gene detection
 * rates together with the phi_up crossover index (the last planted gene whose
 * fold reaches the upper detectability threshold, computed at mu0 = mu_1).
 *
 * @param sc Base scenario; its fold vector is overwritten on the DE prefix.
 * @param detector Detector configuration.
 * @param a Decay amplitude, > 0.
 * @param replicates Replicates to aggregate.
 * @return Rates plus thresholds and the crossover index.
 */
inline ExperimentResult run_power_experiment(const SimulationScenario& sc, const DetectorConfig& detector, double a,
                                             std::int64_t replicates) {
    if (!(a > 0)) {
        throw ConfigError("power experiment: need a > 0");
    }
    if (sc.m1 < 1) {
        throw ConfigError("power experiment: need m1 >= 1 DE genes");
    }
    SimulationScenario planted = sc;
    for (std::int64_t j = 1; j <= sc.m1; ++j) {
        planted.fold[static_cast<std::size_t>(j - 1)] = 1.0 + a / std::sqrt(static_cast<double>(j));
    }
    ExperimentResult res = internal::run_experiment(planted, detector, replicates);
    const double mu0 = planted.mu[0];
    const auto thresholds = phi_thresholds(planted.n, mu0, planted.m, detector.alpha, detector.c);
    res.phi_low = thresholds.first;
    res.phi_up = thresholds.second;
    res.phi_up_crossover = 0;
    for (std::int64_t j = 1; j <= planted.m1; ++j) {
        if (planted.fold[static_cast<std::size_t>(j - 1)] >= res.phi_up) {
            res.phi_up_crossover = j;
        }
    }
    return res;
}

}

#endif
