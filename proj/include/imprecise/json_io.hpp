#pragma once

// JSON reading and writing for instances, points, partitions and run reports.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "imprecise/core.hpp"
#include "imprecise/entropy.hpp"
#include "imprecise/partitions.hpp"
#include "imprecise/quadrec.hpp"

namespace imprecise::io {

using nlohmann::json;

namespace detail {

inline double finite_number(const json& j, const char* field) {
    if (!j.contains(field) || !j.at(field).is_number())
        throw InvalidInput(std::string("missing numeric field \"") + field + "\"");
    const double v = j.at(field).get<double>();
    if (!std::isfinite(v)) throw InvalidInput(std::string("non-finite value in field \"") + field + "\"");
    return v;
}

inline Id id_field(const json& j) {
    if (!j.contains("id") || !j.at("id").is_number_integer() || j.at("id").get<long long>() < 0)
        throw InvalidInput("every entry needs a non-negative integer \"id\"");
    return j.at("id").get<Id>();
}

}  // namespace detail

inline json to_json(const RegionSet& set) {
    json intervals = json::array();
    for (const auto& iv : set.intervals()) intervals.push_back({{"id", iv.id}, {"l", iv.left}, {"r", iv.right}});
    return {{"bbox", {set.bbox().lo, set.bbox().hi}}, {"intervals", std::move(intervals)}};
}

/// Accepts a missing bbox (the hull is used); rejects NaN/inf, sparse ids
/// and intervals outside the bbox.
inline RegionSet region_set_from_json(const json& j) {
    if (!j.is_object() || !j.contains("intervals") || !j.at("intervals").is_array())
        throw InvalidInput("instance JSON needs an \"intervals\" array");
    std::vector<Interval> intervals;
    for (const auto& e : j.at("intervals"))
        intervals.push_back({detail::id_field(e), detail::finite_number(e, "l"), detail::finite_number(e, "r")});
    if (!j.contains("bbox")) return RegionSet::from_intervals(std::move(intervals));
    const auto& box = j.at("bbox");
    if (!box.is_array() || box.size() != 2 || !box[0].is_number() || !box[1].is_number())
        throw InvalidInput("\"bbox\" must be [lo, hi]");
    return RegionSet(std::move(intervals), {box[0].get<double>(), box[1].get<double>()});
}

inline json points_to_json(const std::vector<double>& xs) {
    json points = json::array();
    for (std::size_t i = 0; i < xs.size(); ++i) points.push_back({{"id", i}, {"x", xs[i]}});
    return {{"points", std::move(points)}};
}

/// Dense x-vector indexed by id; every id 0..n-1 must appear once.
inline std::vector<double> points_from_json(const json& j, std::size_t n) {
    if (!j.is_object() || !j.contains("points") || !j.at("points").is_array())
        throw InvalidInput("point JSON needs a \"points\" array");
    std::vector<double> xs(n, 0.0);
    std::vector<bool> seen(n, false);
    for (const auto& e : j.at("points")) {
        const Id id = detail::id_field(e);
        if (id >= n || seen[id]) throw InvalidInput("point ids must be exactly 0..n-1");
        seen[id] = true;
        xs[id] = detail::finite_number(e, "x");
    }
    if (j.at("points").size() != n) throw InvalidInput("point JSON does not cover every interval");
    return xs;
}

inline json to_json(const LevelPartition& p) {
    return {{"kind", to_string(p.kind)}, {"levels", p.levels}};
}

inline json to_json(const OpStats& s) {
    return {{"traversals", s.node_traversals}, {"comparisons", s.value_comparisons},
            {"rotations", s.rotations},        {"balance_changes", s.balance_changes},
            {"reveals", s.reveals},            {"splits", s.splits},
            {"insertions", s.insertions}};
}

inline json to_json(const ApproximationReport& r) {
    json out{{"A_level", r.A_level}, {"nH", r.nH}, {"lemma2_pass", r.lemma2_pass}, {"lemma4_pass", r.lemma4_pass}};
    out["log2_e"] = r.log2_e ? json(*r.log2_e) : json(nullptr);
    out["sandwich_pass"] = r.sandwich_pass ? json(*r.sandwich_pass) : json(nullptr);
    return out;
}

/// Leaves left to right. Gap leaves (compressed empty paths) carry their
/// span instead of a cell.
inline json tree_dump(const CompressedQuadtree& tree) {
    json cells = json::array();
    for (Handle h = tree.first_leaf(); h != kNil; h = tree.next(h)) {
        const auto& leaf = tree.leaf(h);
        json entry;
        if (leaf.kind == QuadLeaf::Kind::cell) {
            entry = {{"depth", leaf.cell.depth}, {"index", leaf.cell.index}};
        } else {
            entry = {{"gap", true}, {"start", leaf.start}, {"end", leaf.end}};
        }
        entry["residents"] = tree.live_residents(h);
        cells.push_back(std::move(entry));
    }
    return {{"cells", std::move(cells)}};
}

inline json read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidInput(path + ": " + e.what());
    }
}

inline void write_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace imprecise::io
