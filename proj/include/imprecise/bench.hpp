#pragma once

// Operation-count benchmark: runs both reconstruction pipelines over a grid
// of instance families and sizes and writes one CSV row per run.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "imprecise/ambiguity.hpp"
#include "imprecise/entropy.hpp"
#include "imprecise/generators.hpp"
#include "imprecise/partitions.hpp"
#include "imprecise/quadrec.hpp"
#include "imprecise/sortrec.hpp"

namespace imprecise {

struct BenchRow {
    std::string family;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::size_t ply = 0;
    double A_level = 0.0;
    std::optional<double> nH;
    std::optional<double> log2_e;
    std::uint64_t sort_traversals = 0;
    std::uint64_t sort_comparisons = 0;
    std::uint64_t sort_rotations = 0;
    std::uint64_t sort_balance_changes = 0;
    std::uint64_t sort_reveals = 0;
    std::uint64_t quad_traversals = 0;
    std::uint64_t quad_splits = 0;
    std::uint64_t quad_reveals = 0;
    std::uint64_t preprocess_ns = 0;
    std::uint64_t reconstruct_ns = 0;
    bool audits_pass = true;  // not a column; drives the exit code
};

inline const std::vector<std::string>& bench_columns() {
    static const std::vector<std::string> cols{
        "family",          "n",              "seed",         "ply",          "A_level",
        "nH",              "log2_e",         "sort_traversals", "sort_comparisons", "sort_rotations",
        "sort_balance_changes", "sort_reveals", "quad_traversals", "quad_splits", "quad_reveals",
        "preprocess_ns",   "reconstruct_ns"};
    return cols;
}

/// Comment line naming the generator, then the column header.
inline std::string bench_header() {
    std::string out = std::string("# rng=") + kGeneratorName + "\n";
    for (std::size_t i = 0; i < bench_columns().size(); ++i) out += (i ? "," : "") + bench_columns()[i];
    return out + "\n";
}

inline std::string to_csv(const BenchRow& r) {
    std::ostringstream out;
    out << std::setprecision(17);
    auto opt = [&](const std::optional<double>& v) {
        if (v) out << *v;
    };
    out << r.family << ',' << r.n << ',' << r.seed << ',' << r.ply << ',' << r.A_level << ',';
    opt(r.nH);
    out << ',';
    opt(r.log2_e);
    out << ',' << r.sort_traversals << ',' << r.sort_comparisons << ',' << r.sort_rotations << ','
        << r.sort_balance_changes << ',' << r.sort_reveals << ',' << r.quad_traversals << ',' << r.quad_splits << ','
        << r.quad_reveals << ',' << r.preprocess_ns << ',' << r.reconstruct_ns << '\n';
    return out.str();
}

struct BenchConfig {
    std::vector<InstanceSpec> families;  // n and seed are filled per cell
    std::vector<std::size_t> sizes;
    std::size_t reps = 1;
    std::uint64_t seed = 1;
    PointMode points = PointMode::uniform;
    std::size_t entropy_cap = 512;  // the oracle is iterative; see README
    std::size_t extension_cap = kExtensionLimit;
    double entropy_tol = 1e-4;
    unsigned threads = 1;
};

/// {"families":["clique",{"family":"clique_blocks","params":{"k":8}}],
///  "sizes":[1024], "reps":1, "seed":1, "points":"uniform",
///  "entropy_cap":512, "extension_cap":20, "entropy_tol":1e-4, "threads":1}
inline BenchConfig bench_config_from_json(const nlohmann::json& j) {
    BenchConfig c;
    if (!j.contains("families") || !j.contains("sizes")) throw InvalidInput("bench config needs families and sizes");
    for (const auto& f : j.at("families")) {
        InstanceSpec spec;
        if (f.is_string()) {
            spec.family = f.get<std::string>();
        } else {
            spec.family = f.at("family").get<std::string>();
            if (f.contains("params"))
                for (const auto& [k, v] : f.at("params").items()) spec.params[k] = v.get<double>();
        }
        c.families.push_back(std::move(spec));
    }
    c.sizes = j.at("sizes").get<std::vector<std::size_t>>();
    c.reps = j.value("reps", c.reps);
    c.seed = j.value("seed", c.seed);
    c.points = point_mode_from_string(j.value("points", std::string("uniform")));
    c.entropy_cap = j.value("entropy_cap", c.entropy_cap);
    c.extension_cap = std::min<std::size_t>(j.value("extension_cap", c.extension_cap), kExtensionLimit);
    c.entropy_tol = j.value("entropy_tol", c.entropy_tol);
    c.threads = std::max(1u, j.value("threads", c.threads));
    return c;
}

struct PipelineRun {
    OpStats sort;
    OpStats quad;
    std::uint64_t preprocess_ns = 0;
    std::uint64_t reconstruct_ns = 0;
    bool audits_pass = true;
};

/// Both pipelines on one instance, with output audits against the true points.
inline PipelineRun run_pipelines(const RegionSet& set, const std::vector<double>& xs) {
    using clock = std::chrono::steady_clock;
    auto ns = [](clock::duration d) {
        return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(d).count());
    };
    PipelineRun run;
    const auto t0 = clock::now();
    SortAux sort_aux = preprocess_sort(set);
    QuadAux quad_aux = preprocess_quadtree(set);
    const auto t1 = clock::now();
    PointOracle sort_oracle(xs);
    PointOracle quad_oracle(xs);
    SortResult sorted = reconstruct_sort(std::move(sort_aux), sort_oracle);
    QuadResult quad = reconstruct_quadtree(std::move(quad_aux), quad_oracle);
    const auto t2 = clock::now();
    run.preprocess_ns = ns(t1 - t0);
    run.reconstruct_ns = ns(t2 - t1);
    run.sort = sorted.stats;
    run.quad = quad.stats;

    // audits, untimed
    const auto order = materialize(sorted.tree, sort_oracle);
    std::vector<Id> ids(set.size());
    std::iota(ids.begin(), ids.end(), Id{0});
    run.audits_pass = order.size() == set.size() &&
                      std::is_sorted(order.begin(), order.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; }) &&
                      verify_deflation(quad.tree) && points_in_place(quad.tree, ids) &&
                      sorted.stats.balance_changes <= 3 * sorted.stats.insertions + 1 &&
                      quad.stats.balance_changes <= 3 * quad.stats.insertions + 1;
    return run;
}

inline BenchRow bench_cell(const InstanceSpec& spec, const BenchConfig& config) {
    const RegionSet set = generate(spec);
    const auto xs = generate_points(set, config.points, spec.seed);
    BenchRow row;
    row.family = spec.label();
    row.n = set.size();
    row.seed = spec.seed;
    row.ply = ply(set);
    row.A_level = pi_ambiguity(set, level_permutation(set));
    if (set.size() <= config.entropy_cap)
        row.nH = static_cast<double>(set.size()) * entropy_oracle(set, config.entropy_tol).H;
    if (set.size() <= config.extension_cap) row.log2_e = log2_big(count_linear_extensions(set));
    const PipelineRun run = run_pipelines(set, xs);
    row.sort_traversals = run.sort.node_traversals;
    row.sort_comparisons = run.sort.value_comparisons;
    row.sort_rotations = run.sort.rotations;
    row.sort_balance_changes = run.sort.balance_changes;
    row.sort_reveals = run.sort.reveals;
    row.quad_traversals = run.quad.node_traversals;
    row.quad_splits = run.quad.splits;
    row.quad_reveals = run.quad.reveals;
    row.preprocess_ns = run.preprocess_ns;
    row.reconstruct_ns = run.reconstruct_ns;
    row.audits_pass = run.audits_pass;
    return row;
}

/// Runs every (family, size, rep) cell. Rows come back in grid order no
/// matter how many worker threads ran them.
inline std::vector<BenchRow> run_bench(const BenchConfig& config) {
    std::vector<InstanceSpec> cells;
    for (const auto& family : config.families)
        for (std::size_t n : config.sizes)
            for (std::size_t rep = 0; rep < config.reps; ++rep) {
                InstanceSpec spec = family;
                spec.n = n;
                spec.seed = config.seed + rep;
                cells.push_back(std::move(spec));
            }
    std::vector<BenchRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_lock;
    std::exception_ptr error;
    auto worker = [&] {
        for (std::size_t k = next++; k < cells.size(); k = next++) {
            try {
                rows[k] = bench_cell(cells[k], config);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_lock);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < config.threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return rows;
}

inline void write_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << bench_header();
    for (const auto& r : rows) out << to_csv(r);
}

/// Parses what write_csv produced. Comment lines are skipped.
inline std::vector<BenchRow> read_csv(std::istream& in) {
    std::vector<BenchRow> rows;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        if (!header) {
            if (fields != bench_columns()) throw InvalidInput("CSV header does not match the bench columns");
            header = true;
            continue;
        }
        if (fields.size() != bench_columns().size())
            throw InvalidInput("CSV row has " + std::to_string(fields.size()) + " fields");
        try {
            auto u64 = [&](std::size_t i) { return static_cast<std::uint64_t>(std::stoull(fields[i])); };
            auto opt = [&](std::size_t i) -> std::optional<double> {
                if (fields[i].empty()) return std::nullopt;
                return std::stod(fields[i]);
            };
            BenchRow r;
            r.family = fields[0];
            r.n = u64(1);
            r.seed = u64(2);
            r.ply = u64(3);
            r.A_level = std::stod(fields[4]);
            r.nH = opt(5);
            r.log2_e = opt(6);
            r.sort_traversals = u64(7);
            r.sort_comparisons = u64(8);
            r.sort_rotations = u64(9);
            r.sort_balance_changes = u64(10);
            r.sort_reveals = u64(11);
            r.quad_traversals = u64(12);
            r.quad_splits = u64(13);
            r.quad_reveals = u64(14);
            r.preprocess_ns = u64(15);
            r.reconstruct_ns = u64(16);
            rows.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw InvalidInput("malformed CSV row: " + line);
        }
    }
    if (!header) throw InvalidInput("CSV has no header row");
    return rows;
}

/// Sorting work per row: traversals + comparisons. Quadtree work:
/// traversals + splits (the CSV carries no quadtree comparison column).
inline double sort_ratio(const BenchRow& r) {
    return static_cast<double>(r.sort_traversals + r.sort_comparisons) / (r.A_level + 1.0);
}
inline double quad_ratio(const BenchRow& r) {
    return static_cast<double>(r.quad_traversals + r.quad_splits) / (r.A_level + 1.0);
}

struct FamilyScaling {
    std::string family;
    std::vector<std::size_t> sizes;
    std::vector<double> ratios;  // per size, max over reps and pipelines
    double min = 0.0;
    double max = 0.0;
    double slope = 0.0;  // least squares of ratio against log2 n
    bool grows = false;  // ratio at the largest n above twice the smallest
};

struct ScalingReport {
    std::vector<FamilyScaling> families;
    double C = 0.0;
    bool any_growth = false;
};

inline ScalingReport scaling_report(const std::vector<BenchRow>& rows) {
    std::map<std::string, std::map<std::size_t, double>> grid;
    std::vector<std::string> order;
    for (const auto& r : rows) {
        if (!grid.count(r.family)) order.push_back(r.family);
        double& cell = grid[r.family][r.n];
        cell = std::max({cell, sort_ratio(r), quad_ratio(r)});
    }
    ScalingReport report;
    for (const auto& name : order) {
        FamilyScaling f;
        f.family = name;
        for (const auto& [n, ratio] : grid[name]) {
            f.sizes.push_back(n);
            f.ratios.push_back(ratio);
        }
        f.min = *std::min_element(f.ratios.begin(), f.ratios.end());
        f.max = *std::max_element(f.ratios.begin(), f.ratios.end());
        if (f.sizes.size() >= 2) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            const double m = static_cast<double>(f.sizes.size());
            for (std::size_t i = 0; i < f.sizes.size(); ++i) {
                const double x = std::log2(static_cast<double>(f.sizes[i]));
                sx += x;
                sy += f.ratios[i];
                sxx += x * x;
                sxy += x * f.ratios[i];
            }
            const double denom = m * sxx - sx * sx;
            f.slope = denom > 0 ? (m * sxy - sx * sy) / denom : 0.0;
            f.grows = f.ratios.back() > 2.0 * f.ratios.front() && f.ratios.back() > 0;
        }
        report.C = std::max(report.C, f.max);
        report.any_growth = report.any_growth || f.grows;
        report.families.push_back(std::move(f));
    }
    return report;
}

inline std::string format_report(const ScalingReport& report) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(3);
    for (const auto& f : report.families) {
        out << f.family << ": min " << f.min << " max " << f.max << " slope " << f.slope
            << (f.grows ? " GROWS" : "") << "\n";
        for (std::size_t i = 0; i < f.sizes.size(); ++i) out << "  n=" << f.sizes[i] << " ratio " << f.ratios[i] << "\n";
    }
    out << "C = " << report.C << (report.any_growth ? " (growth flagged)" : "") << "\n";
    return out.str();
}

}  // namespace imprecise
