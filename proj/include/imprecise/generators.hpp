#pragma once

// Deterministic instance families for tests and benchmarks.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "imprecise/core.hpp"

namespace imprecise {

/// Name recorded in CSV headers so runs can be reproduced elsewhere.
inline constexpr const char* kGeneratorName = "mt19937_64";

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) from the top 53 bits, independent of the standard
    /// library's distribution implementations.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    std::uint64_t below(std::uint64_t bound) { return bound == 0 ? 0 : engine_() % bound; }
    std::uint64_t bits() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

enum class PointMode { uniform, midpoint };

inline PointMode point_mode_from_string(const std::string& s) {
    if (s == "uniform") return PointMode::uniform;
    if (s == "midpoint") return PointMode::midpoint;
    throw InvalidInput("unknown point mode \"" + s + "\" (expected uniform or midpoint)");
}

struct InstanceSpec {
    std::string family;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::map<std::string, double> params;  // k, scale, gap, variant

    double param(const std::string& key, double fallback) const {
        const auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }

    /// "family" or "family:key=value;…" for CSV rows.
    std::string label() const {
        std::string out = family;
        char sep = ':';
        for (const auto& [k, v] : params) {
            std::string value = std::to_string(v);
            value.erase(value.find_last_not_of('0') + 1);
            if (!value.empty() && value.back() == '.') value.pop_back();
            out += sep + k + "=" + value;
            sep = ';';
        }
        return out;
    }
};

inline const std::vector<std::string>& family_names() {
    static const std::vector<std::string> names{"disjoint", "clique",         "clique_blocks", "nested",
                                                "star",     "fig3",           "random_uniform", "ply_matched"};
    return names;
}

namespace detail {

inline std::size_t block_size(const InstanceSpec& spec) {
    const double k = spec.param("k", 8);
    if (!(k >= 1)) throw InvalidInput("block size k must be at least 1");
    return static_cast<std::size_t>(k);
}

// `count` identical copies of [at, at + 1]
inline void add_clique(std::vector<std::pair<double, double>>& out, std::size_t count, double at) {
    for (std::size_t j = 0; j < count; ++j) out.emplace_back(at, at + 1.0);
}

}  // namespace detail

/// Builds the instance for a spec. Same spec, same intervals, bit for bit.
/// Families:
///   disjoint        unit intervals separated by `gap`
///   clique          n copies of one interval
///   clique_blocks   disjoint blocks of k identical intervals
///   nested          a strictly nested chain
///   star            one interval holding n-1 disjoint ones
///   fig3            [0,10] holding [1,2],[3,4],[5,6],[7,8] (n ignored)
///   random_uniform  left ends uniform on [0,n), lengths uniform on [0,scale)
///   ply_matched     variant 0: one k-clique plus n-k disjoint;
///                   variant 1: n/k disjoint k-cliques
inline RegionSet generate(const InstanceSpec& spec) {
    const std::size_t n = spec.n;
    const double gap = spec.param("gap", 1.0);
    if (!(gap > 0)) throw InvalidInput("gap must be positive");
    std::vector<std::pair<double, double>> spans;
    const auto& f = spec.family;
    if (f != "fig3" && n == 0) throw InvalidInput("n must be at least 1");
    if (f == "disjoint") {
        for (std::size_t i = 0; i < n; ++i) spans.emplace_back(i * (1.0 + gap), i * (1.0 + gap) + 1.0);
    } else if (f == "clique") {
        detail::add_clique(spans, n, 0.0);
    } else if (f == "clique_blocks") {
        const std::size_t k = detail::block_size(spec);
        for (std::size_t start = 0, b = 0; start < n; start += k, ++b)
            detail::add_clique(spans, std::min(k, n - start), b * (1.0 + gap));
    } else if (f == "nested") {
        for (std::size_t i = 0; i < n; ++i) spans.emplace_back(double(i), double(2 * n - i));
    } else if (f == "star") {
        const double width = 2.0 * static_cast<double>(n - 1) + 1.0;
        spans.emplace_back(0.0, std::max(width, 1.0));
        for (std::size_t j = 0; j + 1 < n; ++j) spans.emplace_back(2.0 * j + 0.5, 2.0 * j + 1.5);
    } else if (f == "fig3") {
        spans = {{0, 10}, {1, 2}, {3, 4}, {5, 6}, {7, 8}};
    } else if (f == "random_uniform") {
        const double scale = spec.param("scale", 4.0);
        if (!(scale >= 0)) throw InvalidInput("scale must be non-negative");
        Rng rng(spec.seed);
        for (std::size_t i = 0; i < n; ++i) {
            const double left = rng.uniform(0.0, static_cast<double>(n));
            spans.emplace_back(left, left + rng.uniform(0.0, scale));
        }
    } else if (f == "ply_matched") {
        const std::size_t k = std::min(detail::block_size(spec), n);
        if (spec.param("variant", 0) == 0) {
            detail::add_clique(spans, k, 0.0);
            for (std::size_t i = 0; i + k < n; ++i) spans.emplace_back((i + 1) * (1.0 + gap), (i + 1) * (1.0 + gap) + 1.0);
        } else {
            for (std::size_t start = 0, b = 0; start < n; start += k, ++b)
                detail::add_clique(spans, std::min(k, n - start), b * (1.0 + gap));
        }
    } else {
        throw InvalidInput("unknown family \"" + f + "\"");
    }
    return RegionSet::from_spans(std::span<const std::pair<double, double>>(spans));
}

/// Hidden points. Uniform draws use a stream separate from the instance's.
inline std::vector<double> generate_points(const RegionSet& set, PointMode mode, std::uint64_t seed) {
    std::vector<double> xs(set.size());
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (const auto& iv : set.intervals()) {
        const double x = mode == PointMode::midpoint ? iv.left + 0.5 * (iv.right - iv.left)
                                                     : iv.left + (iv.right - iv.left) * rng.unit();
        xs[iv.id] = std::clamp(x, iv.left, iv.right);
    }
    return xs;
}

}  // namespace imprecise
