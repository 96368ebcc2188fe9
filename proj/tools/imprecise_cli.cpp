// Command-line front end: instance generation, the two reconstruction
// pipelines, entropy reports and the benchmark harness.

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imprecise/imprecise.hpp"

using namespace imprecise;
using io::json;

namespace {

std::map<std::string, double> parse_params(const std::vector<std::string>& raw) {
    std::map<std::string, double> out;
    for (const auto& kv : raw) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw InvalidInput("params take key=value, got \"" + kv + "\"");
        try {
            out[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        } catch (const std::logic_error&) {
            throw InvalidInput("param \"" + kv + "\" is not numeric");
        }
    }
    return out;
}

void emit(const json& j) { std::cout << j.dump(2) << '\n'; }

struct Loaded {
    RegionSet set;
    std::vector<double> xs;
};

Loaded load(const std::string& instance, const std::string& points) {
    Loaded l{io::region_set_from_json(io::read_file(instance)), {}};
    if (!points.empty()) l.xs = io::points_from_json(io::read_file(points), l.set.size());
    return l;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Preprocess uncertainty intervals, then reconstruct sorted orders and quadtrees"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate an instance (and optionally hidden points)");
    std::string family, gen_out, gen_points, point_mode = "uniform";
    std::size_t gen_n = 0;
    std::uint64_t gen_seed = 1;
    std::vector<std::string> gen_params;
    gen->add_option("--family", family, "instance family")->required();
    gen->add_option("--n", gen_n, "number of intervals");
    gen->add_option("--seed", gen_seed, "64-bit seed");
    gen->add_option("--params", gen_params, "family parameters as key=value (k, scale, gap, variant)");
    gen->add_option("--out", gen_out, "instance JSON path")->required();
    gen->add_option("--points", gen_points, "also write hidden points here");
    gen->add_option("--point-mode", point_mode, "uniform or midpoint");

    // ambiguity
    auto* amb = app.add_subcommand("ambiguity", "π-ambiguity of the level permutation or the brute-force minimum");
    std::string amb_in, amb_perm = "level";
    amb->add_option("instance", amb_in)->required();
    amb->add_option("--perm", amb_perm, "level or brute")->check(CLI::IsMember({"level", "brute"}));

    // partition
    auto* part = app.add_subcommand("partition", "depth, height or level partition of the containment order");
    std::string part_in, part_kind = "level";
    part->add_option("instance", part_in)->required();
    part->add_option("--kind", part_kind)->check(CLI::IsMember({"depth", "height", "level"}));

    // entropy
    auto* ent = app.add_subcommand("entropy", "interval-graph entropy and the approximation checks");
    std::string ent_in;
    double ent_tol = 1e-7;
    bool ent_ext = false;
    ent->add_option("instance", ent_in)->required();
    ent->add_option("--tol", ent_tol, "duality gap target, bits per element");
    ent->add_flag("--extensions", ent_ext, "count linear extensions (n <= 20)");

    // sort
    auto* srt = app.add_subcommand("sort", "reconstruct the sorted order of the hidden points");
    std::string srt_in, srt_pts;
    bool emit_order = false;
    srt->add_option("instance", srt_in)->required();
    srt->add_option("--points", srt_pts)->required();
    srt->add_flag("--emit-order", emit_order);

    // quadtree
    auto* quad = app.add_subcommand("quadtree", "reconstruct a 2-deflated quadtree on the hidden points");
    std::string quad_in, quad_pts;
    bool dump_tree = false;
    quad->add_option("instance", quad_in)->required();
    quad->add_option("--points", quad_pts)->required();
    quad->add_flag("--dump-tree", dump_tree);

    // bench / report
    auto* bench = app.add_subcommand("bench", "operation-count benchmark over a family x size grid");
    std::string bench_cfg, bench_out;
    bench->add_option("--config", bench_cfg)->required();
    bench->add_option("--out", bench_out)->required();
    auto* report = app.add_subcommand("report", "scaling summary of a bench CSV");
    std::string report_in;
    report->add_option("results", report_in)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            InstanceSpec spec{family, gen_n, gen_seed, parse_params(gen_params)};
            const RegionSet set = generate(spec);
            io::write_file(gen_out, io::to_json(set));
            if (!gen_points.empty())
                io::write_file(gen_points,
                               io::points_to_json(generate_points(set, point_mode_from_string(point_mode), gen_seed)));
            return 0;
        }
        if (*amb) {
            const RegionSet set = io::region_set_from_json(io::read_file(amb_in));
            json out{{"n", set.size()}, {"ply", ply(set)}};
            if (amb_perm == "level") {
                out["A_level"] = pi_ambiguity(set, level_permutation(set));
            } else {
                out["A_all"] = ambiguity_bruteforce(set, PermutationClass::all);
                out["A_compatible"] = ambiguity_bruteforce(set, PermutationClass::containment_compatible);
            }
            emit(out);
            return 0;
        }
        if (*part) {
            const RegionSet set = io::region_set_from_json(io::read_file(part_in));
            const auto p = part_kind == "depth"    ? depth_partition(set)
                           : part_kind == "height" ? height_partition(set)
                                                   : level_partition(set);
            emit(io::to_json(p));
            return 0;
        }
        if (*ent) {
            const RegionSet set = io::region_set_from_json(io::read_file(ent_in));
            auto r = approximation_report(set, ent_tol);
            if (!ent_ext) {
                r.log2_e.reset();
                r.sandwich_pass.reset();
            }
            json out = io::to_json(r);
            if (ent_ext && set.size() <= kExtensionLimit)
                out["extensions"] = count_linear_extensions(set).str();
            emit(out);
            return 0;
        }
        if (*srt) {
            const auto [set, xs] = load(srt_in, srt_pts);
            SortAux aux = preprocess_sort(set);
            const double a = pi_ambiguity(set, aux.pi);
            PointOracle oracle(xs);
            SortResult result = reconstruct_sort(std::move(aux), oracle);
            const OpStats stats = result.stats;
            json out{{"A_pi", a},
                     {"traversals", stats.node_traversals},
                     {"comparisons", stats.value_comparisons},
                     {"rotations", stats.rotations},
                     {"balance_changes", stats.balance_changes},
                     {"reveals", stats.reveals}};
            if (emit_order) {
                std::vector<Id> order;
                for (const auto& [id, x] : materialize(result.tree, oracle)) order.push_back(id);
                out["order"] = order;
            }
            emit(out);
            return 0;
        }
        if (*quad) {
            const auto [set, xs] = load(quad_in, quad_pts);
            QuadAux aux = preprocess_quadtree(set);
            const double a = pi_ambiguity(set, aux.pi);
            PointOracle oracle(xs);
            QuadResult result = reconstruct_quadtree(std::move(aux), oracle);
            json out{{"A_pi", a},
                     {"traversals", result.stats.node_traversals},
                     {"comparisons", result.stats.value_comparisons},
                     {"splits", result.stats.splits},
                     {"rotations", result.stats.rotations},
                     {"balance_changes", result.stats.balance_changes},
                     {"reveals", result.stats.reveals},
                     {"node_count", result.tree.node_count()},
                     {"deflated", verify_deflation(result.tree)}};
            if (dump_tree) out["tree"] = io::tree_dump(result.tree);
            emit(out);
            return 0;
        }
        if (*bench) {
            const BenchConfig config = bench_config_from_json(io::read_file(bench_cfg));
            const auto rows = run_bench(config);
            std::ofstream out(bench_out);
            if (!out) throw std::runtime_error("cannot write " + bench_out);
            write_csv(out, rows);
            bool ok = true;
            for (const auto& r : rows)
                if (!r.audits_pass) {
                    std::cerr << "audit failed: " << r.family << " n=" << r.n << " seed=" << r.seed << '\n';
                    ok = false;
                }
            return ok ? 0 : 1;
        }
        if (*report) {
            std::ifstream in(report_in);
            if (!in) throw std::runtime_error("cannot open " + report_in);
            const auto summary = scaling_report(read_csv(in));
            std::cout << format_report(summary);
            return summary.any_growth ? 3 : 0;
        }
    } catch (const InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
