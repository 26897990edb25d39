#ifndef RANDDE_DETECTOR_HPP
#define RANDDE_DETECTOR_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "count_matrix.hpp"
#include "errors.hpp"
#include "gene_test.hpp"
#include "randomization_math.hpp"
#include "rng.hpp"
#include "scaling.hpp"

/**
 * @file detector.hpp
 *
 * @brief The randomized detection procedure: draw r reference subsets, test
 * every gene outside each subset, tally detections, convert tallies to pooled
 * binomial p-values, apply the capped step-down rule, and iterate with a
 * halved error budget while the cap binds.
 *
 * Randomness contract: a master seed derives one independent counter-based
 * stream per (iteration, draw index); each draw and its redraws consume only
 * that stream. Tallies are merged by integer addition, so results are
 * bit-identical for any thread count.
 */

namespace randde {

/**
 * @brief Per-gene trial and rejection counts accumulated over all draws.
 */
struct DetectionTally {
    /** Number of subset draws tallied. */
    std::int64_t r = 0;
    /** r_j: tests run per gene (gene outside the subset, variance non-degenerate). */
    std::vector<std::int64_t> tests;
    /** R_j: rejections per gene; R_j <= tests[j] <= r. */
    std::vector<std::int64_t> rejections;
    /** Degenerate subset draws that were discarded and redrawn. */
    std::int64_t resampled_subsets = 0;
    /** (gene, subset) pairs skipped for degenerate variance. */
    std::int64_t no_decision_pairs = 0;
};

/**
 * @brief Optional per-gene accumulation of the test statistic across draws.
 *
 * Sums are merged in fixed block order, so contents are thread-count
 * independent.
 */
struct TStatAccumulator {
    /** Per-gene sum of T over decided (gene, subset) pairs. */
    std::vector<double> sum;
    /** Per-gene sum of T^2 over decided pairs. */
    std::vector<double> sum_sq;
    /** Per-gene count of decided pairs (copy of the tally's tests). */
    std::vector<std::int64_t> tests;
};

/**
 * @brief One gene declared differentially expressed.
 */
struct DetectedGene {
    std::string gene_id;
    /** Rejection count at detection time. */
    std::int64_t R = 0;
    /** Test count at detection time. */
    std::int64_t tests = 0;
    /** Step-down p-value it was detected with. */
    double p_value = 0;
};

/**
 * @brief One gene not declared, with its final-pass tally.
 */
struct UndetectedGene {
    std::string gene_id;
    std::int64_t R = 0;
    std::int64_t tests = 0;
    /** Pooled p-value at the final pass's declared count. */
    double p_value = 1;
};

/**
 * @brief Step-down outcome on one tally.
 */
struct StepDownHit {
    /** Row index into the tallied matrix. */
    std::int64_t gene_index = 0;
    std::int64_t R = 0;
    std::int64_t tests = 0;
    /** p-value at the rank it was declared, i.e. the value compared to the
     * rank's threshold. */
    double p_value = 0;
};

struct StepDownResult {
    /** Number of genes declared. */
    std::int64_t d_hat = 0;
    /** Declared genes in rank order. */
    std::vector<StepDownHit> hits;
    /** Detection cap used for the scan. */
    std::int64_t delta = 0;
    /** True when the first-failure scan and the largest passing rank disagree
     * (non-monotone pass pattern); the scan result is authoritative. */
    bool scan_disagreement = false;
};

/**
 * @brief Detector configuration independent of any particular matrix.
 */
struct DetectorConfig {
    /** Reference subset size. */
    std::int64_t k = 10;
    /** Draws per pass; <= 0 selects max(2500, the d=0 randomization requirement). */
    std::int64_t r = 0;
    /** Per-test level. */
    double eta = 0.05;
    /** FWER budget across all passes. */
    double alpha = 0.05;
    /** Type-II budget of the single-gene test. */
    double beta = 0.10;
    /** Quantile inflation constant. */
    double c = 2.0;
    /** Deviation exponent for the randomization requirement. */
    double xi = 0.25;
    /** How reference subsets are drawn. */
    SubsetStrategy strategy = SubsetStrategy::fixed_k(10);
    /** Master seed. */
    std::uint64_t seed = 0;
    /** Hard cap on error-budget halvings. */
    std::int64_t max_iterations = 16;
    /** Worker threads; results do not depend on this. */
    std::int64_t threads = 1;
};

/**
 * @brief One detection pass in the final report.
 */
struct IterationRecord {
    /** Error budget spent on this pass. */
    double alpha = 0;
    /** Detection cap of this pass. */
    std::int64_t delta = 0;
    /** Genes entering this pass. */
    std::int64_t m = 0;
    std::vector<DetectedGene> detected;
    std::int64_t resampled_subsets = 0;
    std::int64_t no_decision_pairs = 0;
    bool scan_disagreement = false;
};

/**
 * @brief Full outcome of the iterated procedure.
 */
struct DetectionReport {
    /** Union of detections in detection order (pass, then rank). */
    std::vector<DetectedGene> detected;
    /** Size of `detected`. */
    std::int64_t d_hat = 0;
    /** All genes never declared, with final-pass tallies. */
    std::vector<UndetectedGene> undetected;
    std::vector<IterationRecord> iterations;
    /** True when the pass limit was reached while the cap still bound. */
    bool truncated = false;
    std::uint64_t seed = 0;
    DetectorConfig config;
};

/**
 * Draw count actually used when the configured value is non-positive:
 * max(2500, min_randomizations at a hypothesized DE count of 0).
 */
inline std::int64_t resolve_randomization_count(const DesignParams& params) {
    return std::max<std::int64_t>(2500, min_randomizations(params, 0));
}

namespace internal {

// Draws of one pass are split into fixed blocks claimed atomically by
// workers; block boundaries depend only on r, so per-block float partials
// merge identically for every thread count.
constexpr std::int64_t kDrawBlock = 64;

struct WorkerTally {
    std::vector<std::int64_t> tests;
    std::vector<std::int64_t> rejections;
    std::int64_t resampled = 0;
    std::int64_t no_decision = 0;
};

struct BlockStats {
    std::vector<double> sum;
    std::vector<double> sum_sq;
};

struct DrawContext {
    const CountMatrix* data = nullptr;
    const SubsetSampler* sampler = nullptr;
    const double* tx = nullptr;  // per-cell 2 sqrt(X), row-major
    double threshold = 0;
    std::uint64_t seed = 0;
    std::int64_t iteration = 0;
    std::int64_t resample_cap = 0;
};

struct DrawScratch {
    std::vector<std::int64_t> subset_totals;
    std::vector<double> sqrt_s;
    std::vector<double> y;
};

inline void process_draw(const DrawContext& ctx, std::int64_t t, WorkerTally& wt, DrawScratch& scratch,
                         BlockStats* stats) {
    const CountMatrix& data = *ctx.data;
    const std::int64_t m = data.m();
    const std::int64_t n = data.n();

    RngStream rng = derive_stream(ctx.seed, stream_tag::subset_draw, static_cast<std::uint64_t>(ctx.iteration),
                                  static_cast<std::uint64_t>(t));

    NormalizationSubset subset;
    std::int64_t total = 0;
    std::int64_t attempts = 0;
    while (true) {
        subset = ctx.sampler->draw(rng);
        std::fill(scratch.subset_totals.begin(), scratch.subset_totals.end(), std::int64_t{0});
        for (std::int64_t j : subset.gene_indices) {
            const std::int64_t* x = data.row(j);
            for (std::int64_t i = 0; i < n; ++i) {
                scratch.subset_totals[static_cast<std::size_t>(i)] += x[i];
            }
        }
        total = 0;
        bool usable = true;
        for (std::int64_t i = 0; i < n; ++i) {
            const std::int64_t v = scratch.subset_totals[static_cast<std::size_t>(i)];
            if (v == 0) {
                usable = false;
                break;
            }
            total += v;
        }
        if (usable) {
            break;
        }
        ++wt.resampled;
        if (++attempts > ctx.resample_cap) {
            throw InfeasibleDesignError("draw " + std::to_string(t) + ": " + std::to_string(attempts)
                                        + " consecutive degenerate reference subsets (cap "
                                        + std::to_string(ctx.resample_cap)
                                        + "); the data cannot support this subset strategy");
        }
    }

    // Same operations as estimate_scaling followed by stabilize, so tallies
    // reproduce the one-gene API bit for bit.
    const double scale = static_cast<double>(n) / static_cast<double>(total);
    for (std::int64_t i = 0; i < n; ++i) {
        scratch.sqrt_s[static_cast<std::size_t>(i)] =
            std::sqrt(scale * static_cast<double>(scratch.subset_totals[static_cast<std::size_t>(i)]));
    }

    const Group* groups = data.groups.data();
    std::size_t sp = 0;
    for (std::int64_t j = 0; j < m; ++j) {
        if (sp < subset.gene_indices.size() && subset.gene_indices[sp] == j) {
            ++sp;
            continue;
        }
        const double* txr = ctx.tx + static_cast<std::size_t>(j) * static_cast<std::size_t>(n);
        for (std::int64_t i = 0; i < n; ++i) {
            scratch.y[static_cast<std::size_t>(i)] = txr[i] / scratch.sqrt_s[static_cast<std::size_t>(i)];
        }
        const TwoGroupStats st = two_group_stats(scratch.y.data(), groups, n, data.n_A, data.n_B);
        if (!(st.sigma > 0)) {
            ++wt.no_decision;
            continue;
        }
        ++wt.tests[static_cast<std::size_t>(j)];
        const double t_value = (st.mean_a - st.mean_b) / st.sigma;
        if (std::abs(t_value) > ctx.threshold) {
            ++wt.rejections[static_cast<std::size_t>(j)];
        }
        if (stats != nullptr) {
            stats->sum[static_cast<std::size_t>(j)] += t_value;
            stats->sum_sq[static_cast<std::size_t>(j)] += t_value * t_value;
        }
    }
}

}

/**
 * Run one full pass of r subset draws and tally per-gene tests and rejections.
 *
 * Each draw estimates scaling on its subset and tests every gene outside it;
 * degenerate subsets (a sample with zero subset total) are redrawn from the
 * same stream and counted, aborting after 100 r consecutive failures for one
 * draw. Degenerate-variance (gene, subset) pairs count toward neither tests
 * nor rejections.
 *
 * @param data Count matrix (m must match `params.m`).
 * @param params Design of the pass.
 * @param strategy Subset-drawing mode.
 * @param seed Master seed.
 * @param iteration Pass number; part of the stream derivation.
 * @param threads Worker count; tallies are identical for any value.
 * @param dump Optional per-gene statistic accumulator (resized here).
 * @return The tally, with `r`, diagnostics, and per-gene counts filled.
 */
inline DetectionTally run_randomizations(const CountMatrix& data, const DesignParams& params,
                                         const SubsetStrategy& strategy, std::uint64_t seed,
                                         std::int64_t iteration = 1, std::int64_t threads = 1,
                                         TStatAccumulator* dump = nullptr) {
    validate(data);
    validate(params);
    if (params.m != data.m()) {
        throw ConfigError("run: params.m=" + std::to_string(params.m) + " does not match the matrix ("
                          + std::to_string(data.m()) + " genes)");
    }
    const std::int64_t m = data.m();
    const std::int64_t n = data.n();
    const TestParams test_params = test_params_for(data, params.eta, params.c);

    internal::DrawContext ctx;
    ctx.data = &data;
    ctx.threshold = rejection_threshold(test_params);
    ctx.seed = seed;
    ctx.iteration = iteration;
    ctx.resample_cap = 100 * params.r;

    const SubsetSampler sampler(data, strategy);
    ctx.sampler = &sampler;

    std::vector<double> tx(static_cast<std::size_t>(m) * static_cast<std::size_t>(n));
    for (std::int64_t j = 0; j < m; ++j) {
        const std::int64_t* x = data.row(j);
        double* txr = tx.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(n);
        for (std::int64_t i = 0; i < n; ++i) {
            txr[i] = 2.0 * std::sqrt(static_cast<double>(x[i]));
        }
    }
    ctx.tx = tx.data();

    const std::int64_t n_blocks = (params.r + internal::kDrawBlock - 1) / internal::kDrawBlock;
    std::vector<internal::BlockStats> block_stats;
    if (dump != nullptr) {
        block_stats.resize(static_cast<std::size_t>(n_blocks));
    }

    const std::int64_t n_workers = std::max<std::int64_t>(1, std::min(threads, n_blocks));
    std::vector<internal::WorkerTally> worker_tallies(static_cast<std::size_t>(n_workers));
    std::atomic<std::int64_t> next_block{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto work = [&](std::int64_t w) {
        internal::WorkerTally& wt = worker_tallies[static_cast<std::size_t>(w)];
        wt.tests.assign(static_cast<std::size_t>(m), 0);
        wt.rejections.assign(static_cast<std::size_t>(m), 0);
        internal::DrawScratch scratch;
        scratch.subset_totals.resize(static_cast<std::size_t>(n));
        scratch.sqrt_s.resize(static_cast<std::size_t>(n));
        scratch.y.resize(static_cast<std::size_t>(n));
        try {
            while (!failed.load(std::memory_order_relaxed)) {
                const std::int64_t b = next_block.fetch_add(1);
                if (b >= n_blocks) {
                    break;
                }
                internal::BlockStats* stats = nullptr;
                if (dump != nullptr) {
                    stats = &block_stats[static_cast<std::size_t>(b)];
                    stats->sum.assign(static_cast<std::size_t>(m), 0.0);
                    stats->sum_sq.assign(static_cast<std::size_t>(m), 0.0);
                }
                const std::int64_t lo = b * internal::kDrawBlock;
                const std::int64_t hi = std::min(params.r, lo + internal::kDrawBlock);
                for (std::int64_t t = lo; t < hi; ++t) {
                    internal::process_draw(ctx, t, wt, scratch, stats);
                }
            }
        } catch (...) {
            {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
            failed.store(true, std::memory_order_relaxed);
        }
    };

    if (n_workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (std::int64_t w = 0; w < n_workers; ++w) {
            pool.emplace_back(work, w);
        }
        for (std::thread& th : pool) {
            th.join();
        }
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }

    DetectionTally tally;
    tally.r = params.r;
    tally.tests.assign(static_cast<std::size_t>(m), 0);
    tally.rejections.assign(static_cast<std::size_t>(m), 0);
    for (const internal::WorkerTally& wt : worker_tallies) {
        for (std::int64_t j = 0; j < m; ++j) {
            tally.tests[static_cast<std::size_t>(j)] += wt.tests[static_cast<std::size_t>(j)];
            tally.rejections[static_cast<std::size_t>(j)] += wt.rejections[static_cast<std::size_t>(j)];
        }
        tally.resampled_subsets += wt.resampled;
        tally.no_decision_pairs += wt.no_decision;
    }
    if (dump != nullptr) {
        dump->sum.assign(static_cast<std::size_t>(m), 0.0);
        dump->sum_sq.assign(static_cast<std::size_t>(m), 0.0);
        for (const internal::BlockStats& bs : block_stats) {
            for (std::int64_t j = 0; j < m; ++j) {
                dump->sum[static_cast<std::size_t>(j)] += bs.sum[static_cast<std::size_t>(j)];
                dump->sum_sq[static_cast<std::size_t>(j)] += bs.sum_sq[static_cast<std::size_t>(j)];
            }
        }
        dump->tests = tally.tests;
    }
    return tally;
}

/**
 * Capped step-down declaration on one tally at a given error budget.
 *
 * Genes are ranked by rejection count descending (ties by ascending row
 * index); rank d is declared when its pooled p-value under a hypothesized DE
 * count of d - 1 falls strictly below alpha_level / (m - d + 1), stopping at
 * the first failure and never scanning past the separation cap. A p-value of
 * exactly 0 (R_j = r) therefore always passes its threshold.
 *
 * @param tally Complete tally of one pass.
 * @param params Design the tally was produced under.
 * @param alpha_level Error budget of this pass, in (0, 1).
 * @return Declared count, ranked hits with the p-values they were compared
 * at, the cap, and a flag for non-monotone pass patterns.
 */
inline StepDownResult step_down(const DetectionTally& tally, const DesignParams& params, double alpha_level) {
    if (!(alpha_level > 0 && alpha_level < 1)) {
        throw ConfigError("step_down: alpha_level must lie strictly inside (0, 1)");
    }
    const std::int64_t m = params.m;
    if (tally.tests.size() != static_cast<std::size_t>(m) || tally.rejections.size() != static_cast<std::size_t>(m)) {
        throw ConfigError("step_down: tally size does not match params.m");
    }
    if (tally.r != params.r) {
        throw ConfigError("step_down: tally draw count does not match params.r");
    }

    std::vector<std::int64_t> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), std::int64_t{0});
    std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        const std::int64_t ra = tally.rejections[static_cast<std::size_t>(a)];
        const std::int64_t rb = tally.rejections[static_cast<std::size_t>(b)];
        if (ra != rb) {
            return ra > rb;
        }
        return a < b;
    });

    StepDownResult result;
    result.delta = delta_cap(params);
    const std::int64_t limit = std::min(result.delta, m);

    std::vector<double> p_at_rank(static_cast<std::size_t>(limit), 1.0);
    std::vector<bool> pass(static_cast<std::size_t>(limit), false);
    for (std::int64_t d = 1; d <= limit; ++d) {
        const std::int64_t gene = order[static_cast<std::size_t>(d - 1)];
        const double p = pooled_p_value(tally.rejections[static_cast<std::size_t>(gene)], params, d - 1);
        p_at_rank[static_cast<std::size_t>(d - 1)] = p;
        pass[static_cast<std::size_t>(d - 1)] = p < alpha_level / static_cast<double>(m - d + 1);
    }

    std::int64_t d_hat = 0;
    while (d_hat < limit && pass[static_cast<std::size_t>(d_hat)]) {
        ++d_hat;
    }
    std::int64_t largest_passing = 0;
    for (std::int64_t d = 1; d <= limit; ++d) {
        if (pass[static_cast<std::size_t>(d - 1)]) {
            largest_passing = d;
        }
    }
    result.d_hat = d_hat;
    result.scan_disagreement = (largest_passing != d_hat);

    result.hits.reserve(static_cast<std::size_t>(d_hat));
    for (std::int64_t d = 1; d <= d_hat; ++d) {
        const std::int64_t gene = order[static_cast<std::size_t>(d - 1)];
        StepDownHit hit;
        hit.gene_index = gene;
        hit.R = tally.rejections[static_cast<std::size_t>(gene)];
        hit.tests = tally.tests[static_cast<std::size_t>(gene)];
        hit.p_value = p_at_rank[static_cast<std::size_t>(d - 1)];
        result.hits.push_back(hit);
    }
    return result;
}

namespace internal {

inline CountMatrix remove_genes(const CountMatrix& data, const std::vector<std::int64_t>& sorted_rows) {
    CountMatrix out;
    out.sample_ids = data.sample_ids;
    out.groups = data.groups;
    out.n_A = data.n_A;
    out.n_B = data.n_B;
    std::size_t rp = 0;
    for (std::int64_t j = 0; j < data.m(); ++j) {
        if (rp < sorted_rows.size() && sorted_rows[rp] == j) {
            ++rp;
            continue;
        }
        out.gene_ids.push_back(data.gene_ids[static_cast<std::size_t>(j)]);
        const std::int64_t* x = data.row(j);
        out.counts.insert(out.counts.end(), x, x + data.n());
    }
    return out;
}

// Effective subset size for the rate math: nominal k, except mass-growth
// subsets whose size varies; there the largest reachable size is used and
// clamped to leave at least two testable genes.
inline std::int64_t effective_k(const CountMatrix& data, const SubsetStrategy& strategy) {
    if (strategy.mode != SubsetStrategy::Mode::GrowToMass) {
        return strategy.k;
    }
    const SubsetSampler sampler(data, strategy);
    return std::min(sampler.max_size(), data.m() - 2);
}

}

/**
 * Run the full iterated procedure.
 *
 * Pass i tests the current gene set with a fresh set of r draws at budget
 * alpha / 2^i. While the declared count reaches the pass's cap, declared
 * genes are removed and the next pass runs on the remainder (fresh cap, fresh
 * subsets, halved budget), so the total budget stays below alpha. The
 * procedure stops when a pass declares fewer genes than its cap (or none),
 * when too few genes remain to draw and test, or when the pass limit is
 * reached (flagged as truncated).
 *
 * @param data Validated count matrix with more than k + 1 genes.
 * @param config Detector configuration; `seed` is the master seed.
 * @param first_pass_stats Optional per-gene statistic accumulator, filled
 * from the first pass (the only one covering every gene).
 * @return Report with the detection union, per-pass records, final tallies of
 * undeclared genes, and diagnostics.
 */
inline DetectionReport detect(const CountMatrix& data, const DetectorConfig& config,
                              TStatAccumulator* first_pass_stats = nullptr) {
    validate(data);
    if (config.max_iterations < 1) {
        throw ConfigError("detect: need max_iterations >= 1");
    }

    DetectionReport report;
    report.seed = config.seed;
    report.config = config;

    CountMatrix current = data;
    {
        const std::int64_t k0 = internal::effective_k(current, config.strategy);
        if (current.m() <= k0 + 1) {
            throw ConfigError("detect: need more than k + 1 genes (m=" + std::to_string(current.m())
                              + ", k=" + std::to_string(k0) + ")");
        }
    }

    // Final-pass state for reporting undeclared genes.
    std::vector<std::string> last_gene_ids;
    DetectionTally last_tally;
    DesignParams last_params;
    std::int64_t last_d_hat = 0;

    bool converged = false;
    for (std::int64_t iter = 1; iter <= config.max_iterations; ++iter) {
        const std::int64_t k_i = internal::effective_k(current, config.strategy);
        if (current.m() <= k_i + 1) {
            // Nothing further is testable; the union is complete.
            converged = true;
            break;
        }
        DesignParams params;
        params.m = current.m();
        params.k = k_i;
        params.eta = config.eta;
        params.alpha = config.alpha;
        params.beta = config.beta;
        params.c = config.c;
        params.xi = config.xi;
        // Malformed levels must fail as configuration errors before the
        // automatic draw count evaluates the rate bounds on them.
        validate(params);
        params.r = config.r > 0 ? config.r : resolve_randomization_count(params);

        const double alpha_i = std::ldexp(config.alpha, -static_cast<int>(iter));
        const DetectionTally tally =
            run_randomizations(current, params, config.strategy, config.seed, iter, config.threads,
                               iter == 1 ? first_pass_stats : nullptr);
        const StepDownResult sd = step_down(tally, params, alpha_i);

        IterationRecord rec;
        rec.alpha = alpha_i;
        rec.delta = sd.delta;
        rec.m = params.m;
        rec.resampled_subsets = tally.resampled_subsets;
        rec.no_decision_pairs = tally.no_decision_pairs;
        rec.scan_disagreement = sd.scan_disagreement;
        for (const StepDownHit& hit : sd.hits) {
            DetectedGene g;
            g.gene_id = current.gene_ids[static_cast<std::size_t>(hit.gene_index)];
            g.R = hit.R;
            g.tests = hit.tests;
            g.p_value = hit.p_value;
            rec.detected.push_back(g);
            report.detected.push_back(g);
        }
        report.iterations.push_back(std::move(rec));

        last_gene_ids = current.gene_ids;
        last_tally = tally;
        last_params = params;
        last_d_hat = sd.d_hat;

        if (sd.d_hat < sd.delta || sd.d_hat == 0) {
            converged = true;
            break;
        }

        std::vector<std::int64_t> removed;
        removed.reserve(sd.hits.size());
        for (const StepDownHit& hit : sd.hits) {
            removed.push_back(hit.gene_index);
        }
        std::sort(removed.begin(), removed.end());
        current = internal::remove_genes(current, removed);
    }

    report.truncated = !converged;
    report.d_hat = static_cast<std::int64_t>(report.detected.size());

    // Undeclared genes: everything in the final pass that was not declared.
    std::vector<bool> declared(last_gene_ids.size(), false);
    if (!report.iterations.empty()) {
        const IterationRecord& last_rec = report.iterations.back();
        for (const DetectedGene& g : last_rec.detected) {
            for (std::size_t j = 0; j < last_gene_ids.size(); ++j) {
                if (last_gene_ids[j] == g.gene_id) {
                    declared[j] = true;
                    break;
                }
            }
        }
    }
    for (std::size_t j = 0; j < last_gene_ids.size(); ++j) {
        if (declared[j]) {
            continue;
        }
        UndetectedGene g;
        g.gene_id = last_gene_ids[j];
        g.R = last_tally.rejections[j];
        g.tests = last_tally.tests[j];
        g.p_value = pooled_p_value(g.R, last_params, last_d_hat);
        report.undetected.push_back(std::move(g));
    }
    return report;
}

}

#endif
