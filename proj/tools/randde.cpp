/**
 * @file randde.cpp
 *
 * @brief Command-line front end: `analyze` runs the randomized detector on a
 * count matrix, `bounds` prints the design's operating characteristics, and
 * `simulate` runs the null / power experiments on synthetic data.
 *
 * Exit codes: 0 success, 2 usage, 3 input parse error, 4 invalid
 * configuration, 5 infeasible design, 6 finished but truncated at the pass
 * limit.
 */

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "randde/randde.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitParse = 3;
constexpr int kExitConfig = 4;
constexpr int kExitInfeasible = 5;
constexpr int kExitTruncated = 6;

void log_line(const std::string& msg) { std::cerr << "[randde] " << msg << "\n"; }

struct CommonOptions {
    std::int64_t k = 10;
    std::int64_t r = 0;  // <= 0 selects the automatic draw count
    double eta = 0.05;
    double alpha = 0.05;
    double beta = 0.10;
    double c = 2.0;
    double xi = 0.25;
    std::uint64_t seed = 0;
    std::int64_t threads = 1;
    std::int64_t max_iterations = 16;
    std::string strategy = "fixed";
    std::string out_dir = ".";
    std::string format = "both";
};

void add_design_flags(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--k", opt.k, "Reference subset size");
    cmd->add_option("--r", opt.r, "Randomizations per pass (0 = automatic)");
    cmd->add_option("--eta", opt.eta, "Per-test level");
    cmd->add_option("--alpha", opt.alpha, "Family-wise error budget");
    cmd->add_option("--beta", opt.beta, "Type-II budget of the single-gene test");
    cmd->add_option("--c", opt.c, "Quantile inflation constant");
    cmd->add_option("--xi", opt.xi, "Deviation exponent for the draw-count requirement");
}

void add_run_flags(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--seed", opt.seed, "Master seed (required; no implicit entropy)")->required();
    cmd->add_option("--threads", opt.threads, "Worker threads (results do not depend on this)");
    cmd->add_option("--max-iterations", opt.max_iterations, "Pass limit of the iterated procedure");
    cmd->add_option("--strategy", opt.strategy, "Subset strategy: fixed | min-intensity:MU0 | grow:M0");
    cmd->add_option("--out-dir", opt.out_dir, "Output directory");
    cmd->add_option("--format", opt.format, "Report outputs to write")
        ->check(CLI::IsMember({"tsv", "json", "both"}));
}

randde::SubsetStrategy parse_strategy(const CommonOptions& opt) {
    const std::string& s = opt.strategy;
    if (s == "fixed") {
        return randde::SubsetStrategy::fixed_k(opt.k);
    }
    const std::size_t colon = s.find(':');
    const std::string head = s.substr(0, colon);
    if (colon == std::string::npos || colon + 1 >= s.size()) {
        throw randde::ConfigError("strategy '" + s + "': expected fixed, min-intensity:MU0, or grow:M0");
    }
    double value = 0;
    try {
        value = std::stod(s.substr(colon + 1));
    } catch (const std::exception&) {
        throw randde::ConfigError("strategy '" + s + "': parameter is not a number");
    }
    if (head == "min-intensity") {
        return randde::SubsetStrategy::min_intensity(opt.k, value);
    }
    if (head == "grow") {
        return randde::SubsetStrategy::grow_to_mass(value);
    }
    throw randde::ConfigError("strategy '" + s + "': unknown mode '" + head + "'");
}

randde::DetectorConfig detector_config(const CommonOptions& opt) {
    randde::DetectorConfig cfg;
    cfg.k = opt.k;
    cfg.r = opt.r;
    cfg.eta = opt.eta;
    cfg.alpha = opt.alpha;
    cfg.beta = opt.beta;
    cfg.c = opt.c;
    cfg.xi = opt.xi;
    cfg.strategy = parse_strategy(opt);
    cfg.seed = opt.seed;
    cfg.max_iterations = opt.max_iterations;
    cfg.threads = opt.threads;
    return cfg;
}

// Thread count and output directory are execution knobs, not analysis
// configuration; leaving them out keeps reports identical across them.
nlohmann::json config_echo(const CommonOptions& opt) {
    nlohmann::json j;
    j["k"] = opt.k;
    j["r"] = opt.r;
    j["eta"] = opt.eta;
    j["alpha"] = opt.alpha;
    j["beta"] = opt.beta;
    j["c"] = opt.c;
    j["xi"] = opt.xi;
    j["strategy"] = opt.strategy;
    j["max_iterations"] = opt.max_iterations;
    j["format"] = opt.format;
    return j;
}

std::string output_path(const CommonOptions& opt, const std::string& name) {
    std::filesystem::create_directories(opt.out_dir);
    return (std::filesystem::path(opt.out_dir) / name).string();
}

void log_design_advisory(const randde::DesignParams& params) {
    const std::int64_t delta = randde::delta_cap(params);
    const randde::RateBounds rb = randde::rate_bounds(params, 0);
    log_line("detection cap delta = " + std::to_string(delta));
    log_line("rates at d=0: theta0 = " + randde::format_double(rb.theta0) + ", theta1 = "
             + randde::format_double(rb.theta1));
    const std::int64_t need = randde::min_randomizations(params, 0);
    if (params.r < need) {
        log_line("advisory: r = " + std::to_string(params.r) + " is below the d=0 requirement "
                 + std::to_string(need));
    }
}

int run_analyze(const CommonOptions& opt, const std::string& counts_path, const std::string& groups_path,
                std::int64_t min_total, const std::string& baseline, bool dump_stats) {
    const auto group_map = randde::load_group_map(groups_path);
    const randde::CountMatrix raw = randde::load_counts(counts_path, group_map);
    randde::FilterSpec filter;
    filter.min_total_reads = min_total;
    auto [data, removed] = randde::filter_low_counts(raw, filter);
    log_line("loaded " + std::to_string(raw.m()) + " genes, kept " + std::to_string(data.m()) + " after filtering ("
             + std::to_string(removed.size()) + " removed)");

    randde::DetectorConfig cfg = detector_config(opt);
    {
        randde::DesignParams params;
        params.m = data.m();
        params.k = cfg.k;
        params.eta = cfg.eta;
        params.alpha = cfg.alpha;
        params.beta = cfg.beta;
        params.c = cfg.c;
        params.xi = cfg.xi;
        randde::validate(params);
        params.r = cfg.r > 0 ? cfg.r : randde::resolve_randomization_count(params);
        log_design_advisory(params);
    }

    randde::TStatAccumulator stats;
    const randde::DetectionReport report = randde::detect(data, cfg, dump_stats ? &stats : nullptr);
    log_line("detected " + std::to_string(report.d_hat) + " genes over " + std::to_string(report.iterations.size())
             + " pass(es)");
    for (const randde::IterationRecord& rec : report.iterations) {
        if (rec.scan_disagreement) {
            log_line("warning: non-monotone step-down pass pattern at alpha = " + randde::format_double(rec.alpha)
                     + "; the first-failure scan result was used");
        }
    }

    nlohmann::json echo = config_echo(opt);
    echo["counts"] = counts_path;
    echo["groups"] = groups_path;
    echo["min_total"] = min_total;
    echo["baseline"] = baseline;
    echo["dump_stats"] = dump_stats;
    echo["seed"] = opt.seed;

    if (opt.format == "json" || opt.format == "both") {
        const nlohmann::json j = randde::detection_report_to_json(report, echo);
        randde::atomic_write_file(output_path(opt, "report.json"), j.dump(2) + "\n");
    }
    if (opt.format == "tsv" || opt.format == "both") {
        randde::atomic_write_file(output_path(opt, "summary.tsv"),
                                  randde::detection_summary_tsv(report, data.gene_ids));
    }
    if (dump_stats) {
        randde::atomic_write_file(output_path(opt, "tstats.tsv"), randde::tstat_dump_tsv(stats, data.gene_ids));
    }

    if (baseline != "none") {
        randde::BaselineMethod method;
        if (baseline == "tmm") {
            method = randde::BaselineMethod::trimmed_mean_m();
        } else if (baseline == "totalcount") {
            method = randde::BaselineMethod::total_count();
        } else {
            method = randde::BaselineMethod::upper_quartile();
        }
        const randde::TestParams params = randde::test_params_for(data, opt.eta, 0.0);
        const randde::BaselineResult base = randde::baseline_detect(data, method, params, opt.alpha);
        log_line("baseline " + baseline + " detected " + std::to_string(base.detected.size()) + " genes");
        randde::atomic_write_file(output_path(opt, "summary_" + baseline + ".tsv"),
                                  randde::baseline_summary_tsv(base, data));
    }

    if (report.truncated) {
        log_line("stopped at the pass limit with the detection cap still binding");
        return kExitTruncated;
    }
    return kExitOk;
}

int run_bounds(const CommonOptions& opt, std::int64_t m, std::int64_t n, std::int64_t n_A, std::int64_t n_B,
               double mu0, double sum_mu_s, double rho_bar, double s_max) {
    randde::DesignParams params;
    params.m = m;
    params.k = opt.k;
    params.eta = opt.eta;
    params.alpha = opt.alpha;
    params.beta = opt.beta;
    params.c = opt.c;
    params.xi = opt.xi;
    randde::validate(params, false);
    params.r = opt.r > 0 ? opt.r : randde::resolve_randomization_count(params);

    std::string out = "name\td\tvalue\n";
    auto scalar_row = [&out](const std::string& name, const std::string& value) {
        out += name + "\t\t" + value + "\n";
    };
    scalar_row("kappa", randde::format_double(randde::kappa(params.m, params.k)));
    const std::int64_t delta = randde::delta_cap(params);
    for (std::int64_t d = 0; d <= delta + 1; ++d) {
        const randde::RateBounds rb = randde::rate_bounds(params, d);
        const std::string ds = std::to_string(d);
        out += "pi0\t" + ds + '\t' + randde::format_double(randde::pi0(params.m, params.k, d)) + '\n';
        out += "pi1\t" + ds + '\t' + randde::format_double(randde::pi1(params.m, params.k, d)) + '\n';
        out += "theta0\t" + ds + '\t' + randde::format_double(rb.theta0) + '\n';
        out += "theta1\t" + ds + '\t' + randde::format_double(rb.theta1) + '\n';
        out += "separated\t" + ds + '\t' + (randde::rates_separated(params, d) ? "1" : "0") + '\n';
    }
    scalar_row("delta", std::to_string(delta));
    out += "min_randomizations\t0\t" + std::to_string(randde::min_randomizations(params, 0)) + '\n';
    out += "min_randomizations\t" + std::to_string(delta) + '\t'
           + std::to_string(randde::min_randomizations(params, delta)) + '\n';
    if (mu0 > 0) {
        const auto thresholds = randde::phi_thresholds(n, mu0, params.m, params.alpha, params.c);
        scalar_row("phi_low", randde::format_double(thresholds.first));
        scalar_row("phi_up", randde::format_double(thresholds.second));
    }
    if (sum_mu_s > 0) {
        if (!(mu0 > 0)) {
            throw randde::ConfigError("bounds: --sum-mu-s needs --mu0 for the tested gene's intensity");
        }
        const randde::TStatErrorBounds tb =
            randde::t_statistic_error_bounds(sum_mu_s, rho_bar, s_max, mu0, mu0, n, n_A, n_B, params.c);
        scalar_row("scaling_deviation_bound",
                   randde::format_double(randde::scaling_deviation_bound(sum_mu_s, rho_bar, s_max, n, params.c)));
        scalar_row("variance_ratio_bound", randde::format_double(tb.variance_ratio_bound));
        scalar_row("noise_term_bound", randde::format_double(tb.noise_term_bound));
        scalar_row("shift_term_bound", randde::format_double(tb.shift_term_bound));
    }
    std::cout << out;
    return kExitOk;
}

int run_simulate(const CommonOptions& opt, const std::string& kind, std::int64_t m, std::int64_t n_A, std::int64_t n_B,
                 double mu0, std::int64_t m1, double a, double gamma, std::int64_t replicates) {
    randde::SimulationScenario sc;
    if (kind == "null") {
        sc = randde::make_null_scenario(m, n_A, n_B, mu0);
    } else {
        sc = randde::make_power_scenario(m, n_A, n_B, mu0, a, m1);
    }
    if (gamma > 0 && std::isfinite(gamma)) {
        sc.gamma.assign(static_cast<std::size_t>(sc.m), gamma);
    }
    sc.replicates = replicates;
    sc.seed = opt.seed;

    randde::DetectorConfig cfg = detector_config(opt);
    const randde::ExperimentResult res = kind == "null"
                                             ? randde::run_null_experiment(sc, cfg, replicates)
                                             : randde::run_power_experiment(sc, cfg, a, replicates);
    log_line("fwer = " + randde::format_double(res.fwer) + ", avg_false = " + randde::format_double(res.avg_false)
             + ", avg_true = " + randde::format_double(res.avg_true));
    log_line("runtime: " + randde::format_double(res.runtime_seconds) + " s");

    nlohmann::json echo = config_echo(opt);
    echo["kind"] = kind;
    echo["m"] = m;
    echo["n_a"] = n_A;
    echo["n_b"] = n_B;
    echo["mu0"] = mu0;
    echo["m1"] = kind == "power" ? m1 : 0;
    echo["a"] = kind == "power" ? a : 0.0;
    echo["gamma"] = (gamma > 0 && std::isfinite(gamma)) ? gamma : 0.0;
    echo["replicates"] = replicates;
    echo["seed"] = opt.seed;

    if (opt.format == "json" || opt.format == "both") {
        const nlohmann::json j = randde::experiment_result_to_json(res, kind, echo, opt.seed);
        randde::atomic_write_file(output_path(opt, "simulation.json"), j.dump(2) + "\n");
    }
    if (opt.format == "tsv" || opt.format == "both") {
        randde::atomic_write_file(output_path(opt, "rates.tsv"), randde::experiment_rates_tsv(res, sc));
    }
    if (res.truncated_runs > 0) {
        log_line(std::to_string(res.truncated_runs) + " replicate(s) hit the pass limit");
        return kExitTruncated;
    }
    return kExitOk;
}

}

int main(int argc, char** argv) {
    CLI::App app{"Randomized reference-subset detector for two-group count data"};
    app.require_subcommand(1);

    CommonOptions opt;

    // analyze
    std::string counts_path;
    std::string groups_path;
    std::int64_t min_total = 20;
    std::string baseline = "none";
    bool dump_stats = false;
    CLI::App* analyze = app.add_subcommand("analyze", "Detect differentially expressed genes in a count matrix");
    analyze->add_option("--counts", counts_path, "Count matrix TSV")->required();
    analyze->add_option("--groups", groups_path, "Two-column sample-to-group TSV")->required();
    analyze->add_option("--min-total", min_total, "Remove genes with fewer total reads");
    analyze->add_option("--baseline", baseline, "Also run a comparator normalization")
        ->check(CLI::IsMember({"none", "tmm", "totalcount", "uq"}));
    analyze->add_flag("--dump-stats", dump_stats, "Write per-gene first-pass statistic moments");
    add_design_flags(analyze, opt);
    add_run_flags(analyze, opt);

    // bounds
    std::int64_t bounds_m = 500;
    std::int64_t bounds_n = 12;
    std::int64_t bounds_n_A = 0;
    std::int64_t bounds_n_B = 0;
    double bounds_mu0 = 0;
    double bounds_sum_mu_s = 0;
    double bounds_rho_bar = 0;
    double bounds_s_max = 1.0;
    CLI::App* bounds = app.add_subcommand("bounds", "Print the design's operating characteristics as TSV");
    bounds->add_option("--m", bounds_m, "Gene count")->required();
    bounds->add_option("--n", bounds_n, "Sample count");
    bounds->add_option("--n-a", bounds_n_A, "Group A size (default n/2)");
    bounds->add_option("--n-b", bounds_n_B, "Group B size (default n - n_A)");
    bounds->add_option("--mu0", bounds_mu0, "Base intensity; enables the fold-change thresholds");
    bounds->add_option("--sum-mu-s", bounds_sum_mu_s, "Subset intensity mass; enables the statistic error bounds");
    bounds->add_option("--rho-bar", bounds_rho_bar, "Intensity-weighted mean overdispersion of the subset");
    bounds->add_option("--s-max", bounds_s_max, "Largest scaling factor");
    add_design_flags(bounds, opt);

    // simulate
    std::string sim_kind;
    std::int64_t sim_m = 500;
    std::int64_t sim_n_A = 6;
    std::int64_t sim_n_B = 6;
    double sim_mu0 = 100.0;
    std::int64_t sim_m1 = 225;
    double sim_a = 10.0;
    double sim_gamma = 0;  // 0 = Poisson
    std::int64_t sim_replicates = 100;
    CLI::App* simulate = app.add_subcommand("simulate", "Run a synthetic-data experiment");
    simulate->add_option("kind", sim_kind, "Experiment kind")->required()->check(CLI::IsMember({"null", "power"}));
    simulate->add_option("--m", sim_m, "Gene count");
    simulate->add_option("--n-a", sim_n_A, "Group A size");
    simulate->add_option("--n-b", sim_n_B, "Group B size");
    simulate->add_option("--mu0", sim_mu0, "Base intensity of every gene");
    simulate->add_option("--m1", sim_m1, "DE gene count (power)");
    simulate->add_option("--a", sim_a, "Fold-change decay amplitude (power)");
    simulate->add_option("--gamma", sim_gamma, "Overdispersion of every gene (0 = Poisson)");
    simulate->add_option("--replicates", sim_replicates, "Replicates to aggregate");
    add_design_flags(simulate, opt);
    add_run_flags(simulate, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (app.got_subcommand(analyze)) {
            return run_analyze(opt, counts_path, groups_path, min_total, baseline, dump_stats);
        }
        if (app.got_subcommand(bounds)) {
            if (bounds_n_A <= 0) {
                bounds_n_A = bounds_n / 2;
            }
            if (bounds_n_B <= 0) {
                bounds_n_B = bounds_n - bounds_n_A;
            }
            return run_bounds(opt, bounds_m, bounds_n, bounds_n_A, bounds_n_B, bounds_mu0, bounds_sum_mu_s,
                              bounds_rho_bar, bounds_s_max);
        }
        return run_simulate(opt, sim_kind, sim_m, sim_n_A, sim_n_B, sim_mu0, sim_m1, sim_a, sim_gamma,
                            sim_replicates);
    } catch (const randde::ParseError& e) {
        log_line(std::string("input error: ") + e.what());
        return kExitParse;
    } catch (const randde::InfeasibleDesignError& e) {
        log_line(std::string("infeasible design: ") + e.what());
        return kExitInfeasible;
    } catch (const randde::ConfigError& e) {
        log_line(std::string("configuration error: ") + e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        log_line(std::string("error: ") + e.what());
        return kExitConfig;
    }
}
