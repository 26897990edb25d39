#ifndef RANDDE_REPORT_IO_HPP
#define RANDDE_REPORT_IO_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "baselines.hpp"
#include "count_matrix.hpp"
#include "detector.hpp"
#include "errors.hpp"
#include "simulator.hpp"

/**
 * @file report_io.hpp
 *
 * @brief Report serialization: JSON and TSV builders plus atomic file writes.
 *
 * All numbers are rendered with shortest round-trip formatting and JSON keys
 * are emitted in sorted order, so identical results serialize to identical
 * bytes. Files are written to a temporary sibling and renamed into place, so
 * readers never observe partial output.
 */

namespace randde {

/** Shortest round-trip decimal rendering of a double. */
inline std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

/**
 * Write `content` to `path` atomically (temporary file plus rename).
 */
inline void atomic_write_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ParseError("cannot write '" + tmp + "'");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw ParseError("failed while writing '" + tmp + "'");
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw ParseError("cannot rename '" + tmp + "' to '" + path + "'");
    }
}

/**
 * Detection report as JSON: configuration echo, seed, per-pass records,
 * the detection union, and run diagnostics.
 */
inline nlohmann::json detection_report_to_json(const DetectionReport& report, const nlohmann::json& config_echo) {
    nlohmann::json j;
    j["config"] = config_echo;
    j["seed"] = report.seed;
    nlohmann::json iterations = nlohmann::json::array();
    std::int64_t resampled = 0;
    std::int64_t no_decision = 0;
    for (const IterationRecord& rec : report.iterations) {
        nlohmann::json it;
        it["alpha"] = rec.alpha;
        it["delta"] = rec.delta;
        it["m"] = rec.m;
        nlohmann::json detected = nlohmann::json::array();
        for (const DetectedGene& g : rec.detected) {
            nlohmann::json gene;
            gene["gene_id"] = g.gene_id;
            gene["R"] = g.R;
            gene["r_j"] = g.tests;
            gene["p_value"] = g.p_value;
            detected.push_back(gene);
        }
        it["detected"] = detected;
        iterations.push_back(it);
        resampled += rec.resampled_subsets;
        no_decision += rec.no_decision_pairs;
    }
    j["iterations"] = iterations;
    nlohmann::json union_ids = nlohmann::json::array();
    for (const DetectedGene& g : report.detected) {
        union_ids.push_back(g.gene_id);
    }
    j["detected_union"] = union_ids;
    j["diagnostics"] = {{"resampled_subsets", resampled}, {"no_decision_pairs", no_decision}};
    return j;
}

/**
 * Detection summary as TSV (gene_id, R_j, r_j, p_value, detected), one row
 * per gene in the given order. Declared genes carry the tally and p-value
 * they were declared with; the rest carry their final-pass values.
 */
inline std::string detection_summary_tsv(const DetectionReport& report, const std::vector<std::string>& gene_order) {
    std::unordered_map<std::string, const DetectedGene*> declared;
    for (const DetectedGene& g : report.detected) {
        declared.emplace(g.gene_id, &g);
    }
    std::unordered_map<std::string, const UndetectedGene*> rest;
    for (const UndetectedGene& g : report.undetected) {
        rest.emplace(g.gene_id, &g);
    }
    std::string out = "gene_id\tR_j\tr_j\tp_value\tdetected\n";
    for (const std::string& id : gene_order) {
        const auto hit = declared.find(id);
        if (hit != declared.end()) {
            const DetectedGene& g = *hit->second;
            out += id + '\t' + std::to_string(g.R) + '\t' + std::to_string(g.tests) + '\t' + format_double(g.p_value)
                   + "\t1\n";
            continue;
        }
        const auto miss = rest.find(id);
        if (miss == rest.end()) {
            throw ConfigError("summary: gene '" + id + "' missing from the report");
        }
        const UndetectedGene& g = *miss->second;
        out += id + '\t' + std::to_string(g.R) + '\t' + std::to_string(g.tests) + '\t' + format_double(g.p_value)
               + "\t0\n";
    }
    return out;
}

/**
 * Baseline summary in the same TSV schema as the detector: R_j is the single
 * unadjusted test's rejection (0/1), r_j is 1 when the gene was decided.
 */
inline std::string baseline_summary_tsv(const BaselineResult& result, const CountMatrix& data) {
    std::string out = "gene_id\tR_j\tr_j\tp_value\tdetected\n";
    for (const BaselineGeneResult& g : result.genes) {
        out += data.gene_ids[static_cast<std::size_t>(g.gene_index)] + '\t'
               + (g.single_test_rejected ? "1" : "0") + '\t' + (g.decided ? "1" : "0") + '\t'
               + format_double(g.p_value) + '\t' + (g.detected ? "1" : "0") + '\n';
    }
    return out;
}

/**
 * Per-gene statistic accumulation as TSV (gene_id, tests, mean_t, sd_t);
 * undefined moments render as nan.
 */
inline std::string tstat_dump_tsv(const TStatAccumulator& acc, const std::vector<std::string>& gene_ids) {
    if (acc.sum.size() != gene_ids.size() || acc.tests.size() != gene_ids.size()) {
        throw ConfigError("stat dump: accumulator does not match gene list");
    }
    std::string out = "gene_id\ttests\tmean_t\tsd_t\n";
    for (std::size_t j = 0; j < gene_ids.size(); ++j) {
        const std::int64_t count = acc.tests[j];
        double mean = std::nan("");
        double sd = std::nan("");
        if (count > 0) {
            mean = acc.sum[j] / static_cast<double>(count);
        }
        if (count > 1) {
            const double ss = acc.sum_sq[j] - acc.sum[j] * acc.sum[j] / static_cast<double>(count);
            sd = std::sqrt(std::max(ss, 0.0) / static_cast<double>(count - 1));
        }
        out += gene_ids[j] + '\t' + std::to_string(count) + '\t' + format_double(mean) + '\t' + format_double(sd)
               + '\n';
    }
    return out;
}

/**
 * Experiment summary as JSON (no wall-clock fields, so reruns are
 * byte-identical).
 */
inline nlohmann::json experiment_result_to_json(const ExperimentResult& res, const std::string& kind,
                                                const nlohmann::json& config_echo, std::uint64_t seed) {
    nlohmann::json j;
    j["config"] = config_echo;
    j["seed"] = seed;
    j["kind"] = kind;
    j["fwer"] = res.fwer;
    j["avg_false"] = res.avg_false;
    j["avg_true"] = res.avg_true;
    j["replicates"] = res.replicates;
    j["truncated_runs"] = res.truncated_runs;
    j["phi_low"] = res.phi_low;
    j["phi_up"] = res.phi_up;
    j["phi_up_crossover"] = res.phi_up_crossover;
    return j;
}

/**
 * Per-gene detection rates as TSV (gene_id, phi, de, detection_rate,
 * ge_phi_up), one row per simulated gene.
 */
inline std::string experiment_rates_tsv(const ExperimentResult& res, const SimulationScenario& sc) {
    if (res.detection_rate.size() != static_cast<std::size_t>(sc.m)) {
        throw ConfigError("rates: result does not match the scenario gene count");
    }
    std::string out = "gene_id\tphi\tde\tdetection_rate\tge_phi_up\n";
    for (std::int64_t j = 0; j < sc.m; ++j) {
        const double phi = sc.fold[static_cast<std::size_t>(j)];
        const bool de = phi != 1.0;
        const bool above = res.phi_up > 0 && phi >= res.phi_up;
        out += "g" + std::to_string(j + 1) + '\t' + format_double(phi) + '\t' + (de ? "1" : "0") + '\t'
               + format_double(res.detection_rate[static_cast<std::size_t>(j)]) + '\t' + (above ? "1" : "0") + '\n';
    }
    return out;
}

}

#endif
