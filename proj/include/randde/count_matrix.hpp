#ifndef RANDDE_COUNT_MATRIX_HPP
#define RANDDE_COUNT_MATRIX_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "errors.hpp"

/**
 * @file count_matrix.hpp
 *
 * @brief Two-group count matrices: ingestion, validation, filtering, round-trip IO.
 *
 * Count files are plain UTF-8 TSV with a header row whose first cell is
 * `gene_id` and whose remaining cells are sample ids; each following row holds
 * one gene id and its non-negative integer counts. Group labels live in a
 * separate two-column TSV (`sample_id`, `group`) with group in {A, B}. No
 * quoting, no missing cells.
 */

namespace randde {

/**
 * @brief Experimental group of one sample.
 */
enum class Group : std::uint8_t { A = 0, B = 1 };

/**
 * @brief Validated two-group count matrix.
 *
 * Rows are genes, columns are samples; `counts` is row-major. Instances are
 * immutable after construction and safe to share across threads.
 */
struct CountMatrix {
    /** Unique gene identifiers, one per row. */
    std::vector<std::string> gene_ids;
    /** Sample identifiers, one per column. */
    std::vector<std::string> sample_ids;
    /** Row-major m-by-n matrix of non-negative counts. */
    std::vector<std::int64_t> counts;
    /** Group label of each sample. */
    std::vector<Group> groups;
    /** Samples labeled A. */
    std::int64_t n_A = 0;
    /** Samples labeled B. */
    std::int64_t n_B = 0;

    /** Number of genes. */
    std::int64_t m() const { return static_cast<std::int64_t>(gene_ids.size()); }
    /** Number of samples. */
    std::int64_t n() const { return static_cast<std::int64_t>(sample_ids.size()); }
    /** Count of gene `i` in sample `j`. */
    std::int64_t at(std::int64_t i, std::int64_t j) const { return counts[static_cast<std::size_t>(i * n() + j)]; }
    /** Pointer to the contiguous counts of gene `i`. */
    const std::int64_t* row(std::int64_t i) const { return counts.data() + static_cast<std::size_t>(i * n()); }

    /** Total count of gene `i` across all samples. */
    std::int64_t gene_total(std::int64_t i) const {
        const std::int64_t* x = row(i);
        std::int64_t t = 0;
        for (std::int64_t j = 0; j < n(); ++j) {
            t += x[j];
        }
        return t;
    }
};

/**
 * @brief Gene filter keeping rows whose total count reaches a threshold.
 */
struct FilterSpec {
    /** Minimum total reads across samples for a gene to be kept (inclusive). */
    std::int64_t min_total_reads = 20;
};

/**
 * Check all structural invariants of a `CountMatrix`, throwing `ConfigError`
 * on the first violation: m >= 2, consistent dimensions, unique gene ids,
 * non-negative counts, and at least two samples in each group.
 */
inline void validate(const CountMatrix& data) {
    const std::int64_t m = data.m();
    const std::int64_t n = data.n();
    if (m < 2) {
        throw ConfigError("count matrix: need at least 2 genes, got " + std::to_string(m));
    }
    if (data.groups.size() != static_cast<std::size_t>(n)) {
        throw ConfigError("count matrix: group labels do not match sample count");
    }
    if (data.counts.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(n)) {
        throw ConfigError("count matrix: counts size does not match m * n");
    }
    std::int64_t n_A = 0, n_B = 0;
    for (Group g : data.groups) {
        (g == Group::A ? n_A : n_B) += 1;
    }
    if (n_A != data.n_A || n_B != data.n_B) {
        throw ConfigError("count matrix: stored group sizes disagree with labels");
    }
    if (n_A < 2 || n_B < 2) {
        throw ConfigError("count matrix: need at least 2 samples per group (n_A=" + std::to_string(n_A)
                          + ", n_B=" + std::to_string(n_B) + ")");
    }
    std::unordered_set<std::string> seen;
    seen.reserve(data.gene_ids.size());
    for (const std::string& id : data.gene_ids) {
        if (!seen.insert(id).second) {
            throw ConfigError("count matrix: duplicate gene id '" + id + "'");
        }
    }
    for (std::int64_t v : data.counts) {
        if (v < 0) {
            throw ConfigError("count matrix: negative count");
        }
    }
}

namespace internal {

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::int64_t parse_count(const std::string& cell, std::int64_t line_no, std::size_t col_no) {
    std::int64_t value = 0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last || cell.empty()) {
        throw ParseError("line " + std::to_string(line_no) + ", column " + std::to_string(col_no)
                         + ": expected a non-negative integer, got '" + cell + "'");
    }
    if (value < 0) {
        throw ParseError("line " + std::to_string(line_no) + ", column " + std::to_string(col_no)
                         + ": negative count '" + cell + "'");
    }
    return value;
}

// Reads all lines, dropping one trailing empty line and any trailing '\r'.
inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open '" + path + "'");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) {
        lines.pop_back();
    }
    return lines;
}

}

/**
 * Load a two-column group file mapping sample ids to groups.
 *
 * @param path TSV with rows `sample_id<TAB>group`, group in {A, B}.
 * @return The sample-to-group map.
 *
 * Throws `ParseError` on malformed rows, unknown group labels, or duplicate
 * sample ids.
 */
inline std::unordered_map<std::string, Group> load_group_map(const std::string& path) {
    const std::vector<std::string> lines = internal::read_lines(path);
    std::unordered_map<std::string, Group> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::int64_t line_no = static_cast<std::int64_t>(i) + 1;
        const std::vector<std::string> cells = internal::split_tabs(lines[i]);
        if (cells.size() != 2 || cells[0].empty()) {
            throw ParseError("group file line " + std::to_string(line_no) + ": expected 'sample_id<TAB>group'");
        }
        Group g;
        if (cells[1] == "A") {
            g = Group::A;
        } else if (cells[1] == "B") {
            g = Group::B;
        } else {
            throw ParseError("group file line " + std::to_string(line_no) + ": group must be 'A' or 'B', got '"
                             + cells[1] + "'");
        }
        if (!out.emplace(cells[0], g).second) {
            throw ParseError("group file line " + std::to_string(line_no) + ": duplicate sample id '" + cells[0] + "'");
        }
    }
    if (out.empty()) {
        throw ParseError("group file '" + path + "' is empty");
    }
    return out;
}

/**
 * Load a count matrix from TSV and resolve group labels.
 *
 * @param path Count file; header `gene_id<TAB>sample...`, one gene per row.
 * @param group_map Sample-to-group assignment covering every header sample.
 * @return Validated `CountMatrix` with rows in file order.
 *
 * Throws `ParseError` for structural problems (naming line and column for bad
 * cells) and `ConfigError` for samples missing from `group_map`, duplicate
 * gene ids, or groups with fewer than 2 samples.
 */
inline CountMatrix load_counts(const std::string& path, const std::unordered_map<std::string, Group>& group_map) {
    const std::vector<std::string> lines = internal::read_lines(path);
    if (lines.empty()) {
        throw ParseError("count file '" + path + "' is empty");
    }
    const std::vector<std::string> header = internal::split_tabs(lines[0]);
    if (header.size() < 2 || header[0] != "gene_id") {
        throw ParseError("count file line 1: header must start with 'gene_id' followed by sample ids");
    }

    CountMatrix data;
    data.sample_ids.assign(header.begin() + 1, header.end());
    const std::size_t n = data.sample_ids.size();
    data.groups.reserve(n);
    for (const std::string& sid : data.sample_ids) {
        const auto it = group_map.find(sid);
        if (it == group_map.end()) {
            throw ConfigError("sample '" + sid + "' has no group assignment");
        }
        data.groups.push_back(it->second);
        (it->second == Group::A ? data.n_A : data.n_B) += 1;
    }

    data.gene_ids.reserve(lines.size() - 1);
    data.counts.reserve((lines.size() - 1) * n);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::int64_t line_no = static_cast<std::int64_t>(i) + 1;
        const std::vector<std::string> cells = internal::split_tabs(lines[i]);
        if (cells.size() != n + 1) {
            throw ParseError("count file line " + std::to_string(line_no) + ": expected " + std::to_string(n + 1)
                             + " cells, got " + std::to_string(cells.size()));
        }
        if (cells[0].empty()) {
            throw ParseError("count file line " + std::to_string(line_no) + ": empty gene id");
        }
        data.gene_ids.push_back(cells[0]);
        for (std::size_t j = 1; j < cells.size(); ++j) {
            data.counts.push_back(internal::parse_count(cells[j], line_no, j + 1));
        }
    }

    validate(data);
    return data;
}

/**
 * Write a count matrix back to TSV in the exact format `load_counts` reads,
 * so that a load/save round-trip is bit-exact.
 */
inline void save_counts(const std::string& path, const CountMatrix& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ParseError("cannot write '" + path + "'");
    }
    out << "gene_id";
    for (const std::string& sid : data.sample_ids) {
        out << '\t' << sid;
    }
    out << '\n';
    for (std::int64_t i = 0; i < data.m(); ++i) {
        out << data.gene_ids[static_cast<std::size_t>(i)];
        const std::int64_t* x = data.row(i);
        for (std::int64_t j = 0; j < data.n(); ++j) {
            out << '\t' << x[j];
        }
        out << '\n';
    }
    if (!out) {
        throw ParseError("failed while writing '" + path + "'");
    }
}

/**
 * Write the group labels of a matrix as the two-column TSV `load_group_map`
 * reads.
 */
inline void save_groups(const std::string& path, const CountMatrix& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ParseError("cannot write '" + path + "'");
    }
    for (std::int64_t j = 0; j < data.n(); ++j) {
        out << data.sample_ids[static_cast<std::size_t>(j)] << '\t'
            << (data.groups[static_cast<std::size_t>(j)] == Group::A ? 'A' : 'B') << '\n';
    }
    if (!out) {
        throw ParseError("failed while writing '" + path + "'");
    }
}

/**
 * Remove genes whose total count falls below the filter threshold.
 *
 * @param data Input matrix.
 * @param spec Threshold; genes with total >= `min_total_reads` are kept.
 * @return The filtered matrix (row order preserved) and the removed gene ids.
 *
 * Throws `ConfigError` when fewer than 2 genes survive, since nothing
 * downstream can run on an essentially empty matrix.
 */
inline std::pair<CountMatrix, std::vector<std::string>> filter_low_counts(const CountMatrix& data,
                                                                          const FilterSpec& spec) {
    if (spec.min_total_reads < 0) {
        throw ConfigError("filter: min_total_reads must be >= 0");
    }
    CountMatrix kept;
    kept.sample_ids = data.sample_ids;
    kept.groups = data.groups;
    kept.n_A = data.n_A;
    kept.n_B = data.n_B;
    std::vector<std::string> removed;
    for (std::int64_t i = 0; i < data.m(); ++i) {
        if (data.gene_total(i) >= spec.min_total_reads) {
            kept.gene_ids.push_back(data.gene_ids[static_cast<std::size_t>(i)]);
            const std::int64_t* x = data.row(i);
            kept.counts.insert(kept.counts.end(), x, x + data.n());
        } else {
            removed.push_back(data.gene_ids[static_cast<std::size_t>(i)]);
        }
    }
    if (kept.m() < 2) {
        throw ConfigError("filter: fewer than 2 genes remain after filtering (threshold "
                          + std::to_string(spec.min_total_reads) + ")");
    }
    return {std::move(kept), std::move(removed)};
}

}

#endif
