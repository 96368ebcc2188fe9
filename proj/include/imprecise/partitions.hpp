#pragma once

// Layerings of the containment DAG (depth, height, level) and the level
// permutation that drives both reconstruction pipelines. The DAG itself is
// never built; it can have quadratically many edges.

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "imprecise/ambiguity.hpp"
#include "imprecise/core.hpp"
#include "imprecise/detail/fenwick.hpp"

namespace imprecise {

enum class PartitionKind { depth, height, level };

inline const char* to_string(PartitionKind k) {
    switch (k) {
        case PartitionKind::depth: return "depth";
        case PartitionKind::height: return "height";
        case PartitionKind::level: return "level";
    }
    return "?";
}

/// levels[0] is the first layer (D_1 / H_1 / L_1). Ids inside a layer are
/// ascending.
struct LevelPartition {
    PartitionKind kind = PartitionKind::level;
    std::vector<std::vector<Id>> levels;

    /// level index (0-based) per id.
    std::vector<std::size_t> level_of(std::size_t n) const {
        std::vector<std::size_t> out(n, 0);
        for (std::size_t j = 0; j < levels.size(); ++j)
            for (Id id : levels[j]) out[id] = j;
        return out;
    }
};

namespace detail {

inline LevelPartition layers_from_index(PartitionKind kind, const std::vector<std::size_t>& index,
                                        std::size_t count) {
    LevelPartition out{kind, std::vector<std::vector<Id>>(count)};
    for (Id id = 0; id < index.size(); ++id) out.levels[index[id]].push_back(id);
    return out;
}

/// Ids ordered so that every strict container precedes what it contains;
/// identical spans are adjacent.
inline std::vector<Id> containers_first(const RegionSet& set) {
    std::vector<Id> ids(set.size());
    std::iota(ids.begin(), ids.end(), Id{0});
    std::sort(ids.begin(), ids.end(), [&](Id a, Id b) {
        const auto& x = set[a];
        const auto& y = set[b];
        if (x.left != y.left) return x.left < y.left;
        if (x.right != y.right) return x.right > y.right;
        return a < b;
    });
    return ids;
}

/// Ids ordered so that every interval precedes its strict containers;
/// identical spans are adjacent.
inline std::vector<Id> contained_first(const RegionSet& set) {
    std::vector<Id> ids(set.size());
    std::iota(ids.begin(), ids.end(), Id{0});
    std::sort(ids.begin(), ids.end(), [&](Id a, Id b) {
        const auto& x = set[a];
        const auto& y = set[b];
        if (x.left != y.left) return x.left > y.left;
        if (x.right != y.right) return x.right < y.right;
        return a < b;
    });
    return ids;
}

/// Calls fn(begin, end) for each run of identical spans in an ordering that
/// keeps identical spans adjacent.
template <typename Fn>
void for_each_span_group(const RegionSet& set, const std::vector<Id>& order, Fn&& fn) {
    std::size_t begin = 0;
    while (begin < order.size()) {
        std::size_t end = begin + 1;
        while (end < order.size() && same_span(set[order[begin]], set[order[end]])) ++end;
        fn(begin, end);
        begin = end;
    }
}

/// Root distance of every interval in the containment DAG (0 = contained in
/// nothing), by a left-to-right sweep over per-depth maximal right endpoints.
inline std::vector<std::size_t> containment_depths(const RegionSet& set, std::size_t& max_depth) {
    const auto order = containers_first(set);
    std::vector<std::size_t> depth(set.size(), 0);
    // reach[d]: largest right endpoint seen at depth d; non-increasing in d.
    std::vector<double> reach;
    for_each_span_group(set, order, [&](std::size_t begin, std::size_t end) {
        const double r = set[order[begin]].right;
        // Everything swept so far starts at or left of this span, so it is a
        // strict container iff it reaches r (identical spans are not swept yet).
        const auto deeper = std::partition_point(reach.begin(), reach.end(), [&](double m) { return m >= r; });
        const auto d = static_cast<std::size_t>(deeper - reach.begin());
        if (d == reach.size()) {
            reach.push_back(r);
        } else {
            reach[d] = std::max(reach[d], r);
        }
        for (std::size_t k = begin; k < end; ++k) depth[order[k]] = d;
    });
    max_depth = reach.empty() ? 0 : reach.size() - 1;
    return depth;
}

/// Offline 2-D dominance maximum: points (left rank, right value) are known
/// up front and activated one at a time; a query returns the largest tag
/// among active points with left >= c and right <= d. O(log^2 n) per call.
class DominanceMax {
public:
    explicit DominanceMax(const RegionSet& set) : n_(set.size()) {
        by_left_.resize(n_);
        std::iota(by_left_.begin(), by_left_.end(), Id{0});
        std::sort(by_left_.begin(), by_left_.end(), [&](Id a, Id b) {
            const auto& x = set[a];
            const auto& y = set[b];
            if (x.left != y.left) return x.left < y.left;
            if (x.right != y.right) return x.right < y.right;
            return a < b;
        });
        position_.resize(n_);
        lefts_.resize(n_);
        for (std::size_t p = 0; p < n_; ++p) {
            position_[by_left_[p]] = p;
            lefts_[p] = set[by_left_[p]].left;
        }
        size_ = 1;
        while (size_ < n_) size_ <<= 1;
        keys_.assign(2 * size_, {});
        for (std::size_t p = 0; p < n_; ++p) {
            const Id id = by_left_[p];
            for (std::size_t node = p + size_; node >= 1; node >>= 1) keys_[node].push_back({set[id].right, p});
        }
        maxima_.reserve(2 * size_);
        for (std::size_t node = 0; node < 2 * size_; ++node) {
            std::sort(keys_[node].begin(), keys_[node].end());
            maxima_.emplace_back(keys_[node].size(), 0u);
        }
    }

    void activate(Id id, std::size_t tag) {
        const std::size_t p = position_[id];
        const Key key{right_of(p), p};
        for (std::size_t node = p + size_; node >= 1; node >>= 1) {
            const auto& ks = keys_[node];
            const auto at = static_cast<std::size_t>(std::lower_bound(ks.begin(), ks.end(), key) - ks.begin());
            maxima_[node].raise(at, tag);
        }
    }

    std::size_t query(double c, double d) const {
        const auto first =
            static_cast<std::size_t>(std::lower_bound(lefts_.begin(), lefts_.end(), c) - lefts_.begin());
        std::size_t best = 0;
        std::size_t lo = first + size_;
        std::size_t hi = n_ + size_;
        auto visit = [&](std::size_t node) {
            const auto& ks = keys_[node];
            const auto cnt = static_cast<std::size_t>(
                std::upper_bound(ks.begin(), ks.end(), Key{d, static_cast<std::size_t>(-1)}) - ks.begin());
            best = std::max(best, maxima_[node].prefix(cnt));
        };
        while (lo < hi) {
            if (lo & 1) visit(lo++);
            if (hi & 1) visit(--hi);
            lo >>= 1;
            hi >>= 1;
        }
        return best;
    }

private:
    using Key = std::pair<double, std::size_t>;

    double right_of(std::size_t p) const {
        const auto& ks = keys_[p + size_];
        return ks.front().first;
    }

    std::size_t n_ = 0;
    std::size_t size_ = 1;
    std::vector<Id> by_left_;
    std::vector<std::size_t> position_;
    std::vector<double> lefts_;
    std::vector<std::vector<Key>> keys_;
    std::vector<FenwickMax<std::size_t>> maxima_;
};

}  // namespace detail

/// D_1..D_m: D_j holds the intervals at root distance m-j. O(n log n).
inline LevelPartition depth_partition(const RegionSet& set) {
    std::size_t max_depth = 0;
    const auto depth = detail::containment_depths(set, max_depth);
    std::vector<std::size_t> index(set.size());
    for (Id id = 0; id < set.size(); ++id) index[id] = max_depth - depth[id];
    return detail::layers_from_index(PartitionKind::depth, index, max_depth + 1);
}

/// H_1..H_m: H_j holds the intervals whose longest chain of strictly
/// contained intervals below them has j members (themselves included).
/// Narrow-to-wide sweep with a dominance-max structure, O(n log^2 n).
inline LevelPartition height_partition(const RegionSet& set) {
    const std::size_t n = set.size();
    std::vector<Id> order(n);
    std::iota(order.begin(), order.end(), Id{0});
    std::sort(order.begin(), order.end(), [&](Id a, Id b) {
        const auto& x = set[a];
        const auto& y = set[b];
        const double lx = x.length();
        const double ly = y.length();
        if (lx != ly) return lx < ly;
        // rounding can tie the lengths of nested spans; keep contained first
        if (x.left != y.left) return x.left > y.left;
        if (x.right != y.right) return x.right < y.right;
        return a < b;
    });
    detail::DominanceMax dominance(set);
    std::vector<std::size_t> height(n, 0);
    std::size_t tallest = 0;
    detail::for_each_span_group(set, order, [&](std::size_t begin, std::size_t end) {
        const auto& iv = set[order[begin]];
        const std::size_t h = dominance.query(iv.left, iv.right) + 1;
        tallest = std::max(tallest, h);
        for (std::size_t k = begin; k < end; ++k) height[order[k]] = h;
        for (std::size_t k = begin; k < end; ++k) dominance.activate(order[k], h);
    });
    std::vector<std::size_t> index(n);
    for (Id id = 0; id < n; ++id) index[id] = height[id] - 1;
    return detail::layers_from_index(PartitionKind::height, index, tallest);
}

/// Quadratic reference for depth_partition.
inline LevelPartition depth_partition_reference(const RegionSet& set) {
    const std::size_t n = set.size();
    const auto order = detail::containers_first(set);
    std::vector<std::size_t> depth(n, 0);
    std::size_t deepest = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const Id i = order[k];
        for (std::size_t q = 0; q < k; ++q) {
            const Id j = order[q];
            if (strictly_contains(set[j], set[i])) depth[i] = std::max(depth[i], depth[j] + 1);
        }
        deepest = std::max(deepest, depth[i]);
    }
    std::vector<std::size_t> index(n);
    for (Id id = 0; id < n; ++id) index[id] = deepest - depth[id];
    return detail::layers_from_index(PartitionKind::depth, index, deepest + 1);
}

/// Quadratic reference for height_partition.
inline LevelPartition height_partition_reference(const RegionSet& set) {
    const std::size_t n = set.size();
    const auto order = detail::contained_first(set);
    std::vector<std::size_t> height(n, 1);
    std::size_t tallest = 1;
    for (std::size_t k = 0; k < n; ++k) {
        const Id i = order[k];
        for (std::size_t q = 0; q < k; ++q) {
            const Id j = order[q];
            if (strictly_contains(set[i], set[j])) height[i] = std::max(height[i], height[j] + 1);
        }
        tallest = std::max(tallest, height[i]);
    }
    std::vector<std::size_t> index(n);
    for (Id id = 0; id < n; ++id) index[id] = height[id] - 1;
    return detail::layers_from_index(PartitionKind::height, index, tallest);
}

/// Intervals that strictly contain no other interval, ascending ids.
inline std::vector<Id> containment_leaves(const RegionSet& set) {
    const auto order = detail::contained_first(set);
    std::vector<bool> leaf(set.size(), false);
    // Everything swept so far starts at or right of the current span.
    double nearest_end = std::numeric_limits<double>::infinity();
    detail::for_each_span_group(set, order, [&](std::size_t begin, std::size_t end) {
        const auto& iv = set[order[begin]];
        const bool is_leaf = nearest_end > iv.right;
        for (std::size_t k = begin; k < end; ++k) leaf[order[k]] = is_leaf;
        nearest_end = std::min(nearest_end, iv.right);
    });
    std::vector<Id> out;
    for (Id id = 0; id < set.size(); ++id)
        if (leaf[id]) out.push_back(id);
    return out;
}

/// L_1 = containment leaves; every other interval keeps its depth layer,
/// with layers left empty by the leaf extraction dropped.
inline LevelPartition level_partition(const RegionSet& set) {
    const std::size_t n = set.size();
    const auto depth = depth_partition(set);
    const auto leaves = containment_leaves(set);
    std::vector<bool> is_leaf(n, false);
    for (Id id : leaves) is_leaf[id] = true;

    LevelPartition out{PartitionKind::level, {leaves}};
    for (const auto& layer : depth.levels) {
        std::vector<Id> rest;
        for (Id id : layer)
            if (!is_leaf[id]) rest.push_back(id);
        if (!rest.empty()) out.levels.push_back(std::move(rest));
    }
    return out;
}

/// Right-to-left order used inside every layer: right endpoint descending,
/// then left endpoint descending, then id.
inline bool right_to_left(const Interval& a, const Interval& b) {
    if (a.right != b.right) return a.right > b.right;
    if (a.left != b.left) return a.left > b.left;
    return a.id < b.id;
}

inline Permutation permutation_from_partition(const RegionSet& set, const LevelPartition& partition) {
    Permutation pi;
    pi.order.reserve(set.size());
    for (const auto& layer : partition.levels) {
        std::vector<Id> ids = layer;
        std::sort(ids.begin(), ids.end(), [&](Id a, Id b) { return right_to_left(set[a], set[b]); });
        pi.order.insert(pi.order.end(), ids.begin(), ids.end());
    }
    return pi;
}

/// The containment-compatible processing order: leaves right to left, then
/// each remaining layer right to left.
inline Permutation level_permutation(const RegionSet& set) {
    return permutation_from_partition(set, level_partition(set));
}

/// A^π(R) under the level permutation; an O(n log n) stand-in for A(R) and,
/// up to constant factors, for n·H(R).
inline double ambiguity_approx(const RegionSet& set) {
    return pi_ambiguity(set, level_permutation(set));
}

}  // namespace imprecise
