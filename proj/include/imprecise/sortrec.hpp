#pragma once

// Sorting pipeline: preprocess the intervals alone into a balanced leaf tree
// over the bottom intervals plus one anchor per remaining interval, then
// reconstruct the sorted order of the hidden points with work proportional
// to the π-ambiguity of the level permutation.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "imprecise/ambiguity.hpp"
#include "imprecise/core.hpp"
#include "imprecise/detail/leaf_tree.hpp"
#include "imprecise/partitions.hpp"

namespace imprecise {

struct SortLeaf {
    enum class Kind : std::uint8_t { point, slot, dummy };
    Kind kind = Kind::dummy;
    Id id = 0;
    double value = 0.0;  // points
    double left = 0.0;   // slots
    double right = 0.0;
};

namespace detail {

struct SortTraits {
    // (value, id): ids break ties so every key is distinct
    using Key = std::pair<double, std::uint64_t>;
    using Router = Key;
    using Leaf = SortLeaf;

    static constexpr std::uint64_t kTop = std::numeric_limits<std::uint64_t>::max();
    static constexpr double kInf = std::numeric_limits<double>::infinity();

    static Key low(const Leaf& leaf) {
        switch (leaf.kind) {
            case Leaf::Kind::point: return {leaf.value, leaf.id};
            case Leaf::Kind::slot: return {leaf.left, 0};
            case Leaf::Kind::dummy: break;
        }
        return {kInf, kTop};
    }
    static Key high(const Leaf& leaf) {
        switch (leaf.kind) {
            case Leaf::Kind::point: return {leaf.value, leaf.id};
            case Leaf::Kind::slot: return {leaf.right, kTop};
            case Leaf::Kind::dummy: break;
        }
        return {kInf, kTop};
    }

    static int place(const Leaf& leaf, const Key& key) {
        if (leaf.kind == Leaf::Kind::dummy) return -1;
        if (key < low(leaf)) return -1;
        if (high(leaf) < key) return 1;
        return 0;
    }
    static bool goes_left(const Key& key, const Router& router) { return key <= router; }
    static Router router_after(const Leaf& leaf) { return high(leaf); }
    static bool left_of(const Leaf& leaf, const Router& router) { return high(leaf) <= router; }
    static bool is_dummy(const Leaf& leaf) { return leaf.kind == Leaf::Kind::dummy; }
    static Leaf dummy() { return {}; }
};

/// Over a sequence sorted by left endpoint: the last index >= lo whose right
/// endpoint is <= bound (or < bound). Segment tree of minima.
class LastAtMost {
public:
    explicit LastAtMost(const std::vector<double>& values) : n_(values.size()) {
        size_ = 1;
        while (size_ < n_) size_ <<= 1;
        min_.assign(2 * size_, std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < n_; ++i) min_[size_ + i] = values[i];
        for (std::size_t i = size_ - 1; i >= 1; --i) min_[i] = std::min(min_[2 * i], min_[2 * i + 1]);
    }

    std::optional<std::size_t> query(std::size_t lo, double bound, bool strict) const {
        return search(1, 0, size_, lo, bound, strict);
    }

private:
    bool admits(double v, double bound, bool strict) const { return strict ? v < bound : v <= bound; }

    std::optional<std::size_t> search(std::size_t node, std::size_t begin, std::size_t end, std::size_t lo,
                                      double bound, bool strict) const {
        if (end <= lo || !admits(min_[node], bound, strict)) return std::nullopt;
        if (end - begin == 1) return begin;
        const std::size_t mid = (begin + end) / 2;
        if (auto r = search(2 * node + 1, mid, end, lo, bound, strict)) return r;
        return search(2 * node, begin, mid, lo, bound, strict);
    }

    std::size_t n_;
    std::size_t size_ = 1;
    std::vector<double> min_;
};

}  // namespace detail

using SortTree = detail::LeafTree<detail::SortTraits>;
using detail::Handle;
using detail::kNil;
using detail::Position;
using detail::Side;

/// Fibonacci-shaped tree over pairwise disjoint intervals sorted left to
/// right. Returns the tree and the handle of each slot, in input order.
inline std::pair<SortTree, std::vector<Handle>> build_fibonacci_tree(const std::vector<Interval>& bottoms) {
    for (std::size_t k = 1; k < bottoms.size(); ++k)
        if (!(bottoms[k - 1].right < bottoms[k].left))
            throw InvalidInput("bottom intervals must be disjoint and sorted (ids " +
                               std::to_string(bottoms[k - 1].id) + ", " + std::to_string(bottoms[k].id) + ")");
    std::vector<SortLeaf> leaves;
    leaves.reserve(bottoms.size());
    for (const auto& b : bottoms) leaves.push_back({SortLeaf::Kind::slot, b.id, 0.0, b.left, b.right});
    SortTree tree;
    auto handles = tree.build_fibonacci(std::move(leaves));
    return {std::move(tree), std::move(handles)};
}

/// Preprocessing output for the sorting pipeline.
struct SortAux {
    RegionSet set;
    Permutation pi;
    std::vector<Id> bottoms;              // ascending by position
    std::vector<bool> is_bottom;
    std::vector<bool> in_first_level;
    std::vector<std::optional<Id>> anchor;  // empty for bottoms
    SortTree tree;
    std::vector<Handle> leaf_of;          // registry; kNil until an id has a leaf
};

/// Level permutation, bottoms, anchors and the initial tree. O(n log n).
inline SortAux preprocess_sort(const RegionSet& set) {
    const std::size_t n = set.size();
    SortAux aux;
    aux.set = set;
    const auto levels = level_partition(set);
    aux.pi = permutation_from_partition(set, levels);
    aux.in_first_level.assign(n, false);
    for (Id id : levels.levels.front()) aux.in_first_level[id] = true;

    const auto profile = contact_profile(set, aux.pi);
    aux.is_bottom.assign(n, false);
    for (std::size_t k = 0; k < n; ++k)
        if (profile.sizes[k] == 1) {
            aux.is_bottom[aux.pi.order[k]] = true;
            aux.bottoms.push_back(aux.pi.order[k]);
        }

    // Contained-interval anchors: sort by (left, right) and ask for the last
    // interval at or after l_i whose right endpoint fits under r_i.
    std::vector<Id> by_left(n);
    std::iota(by_left.begin(), by_left.end(), Id{0});
    std::sort(by_left.begin(), by_left.end(), [&](Id a, Id b) {
        if (set[a].left != set[b].left) return set[a].left < set[b].left;
        if (set[a].right != set[b].right) return set[a].right < set[b].right;
        return a < b;
    });
    std::vector<double> lefts(n), rights(n);
    for (std::size_t k = 0; k < n; ++k) {
        lefts[k] = set[by_left[k]].left;
        rights[k] = set[by_left[k]].right;
    }
    const detail::LastAtMost fits(rights);

    aux.anchor.assign(n, std::nullopt);
    for (std::size_t k = 0; k < n; ++k) {
        const Id id = aux.pi.order[k];
        if (aux.is_bottom[id]) continue;
        if (aux.in_first_level[id]) {
            aux.anchor[id] = aux.pi.order[k - 1];
            continue;
        }
        const auto& iv = set[id];
        const auto lo = static_cast<std::size_t>(std::lower_bound(lefts.begin(), lefts.end(), iv.left) - lefts.begin());
        auto hit = fits.query(lo, iv.right, false);
        // an identical span is not a strict containee; retry excluding r_i
        if (hit && same_span(set[by_left[*hit]], iv)) hit = fits.query(lo, iv.right, true);
        if (!hit || !strictly_contains(iv, set[by_left[*hit]]))
            throw std::logic_error("non-leaf interval without a contained interval");
        aux.anchor[id] = by_left[*hit];
    }

    std::vector<Interval> slots;
    slots.reserve(aux.bottoms.size());
    for (Id id : aux.bottoms) slots.push_back(set[id]);
    std::sort(slots.begin(), slots.end(), [](const Interval& a, const Interval& b) { return a.left < b.left; });
    auto [tree, handles] = build_fibonacci_tree(slots);
    aux.tree = std::move(tree);
    aux.leaf_of.assign(n, kNil);
    for (std::size_t k = 0; k < slots.size(); ++k) aux.leaf_of[slots[k].id] = handles[k];
    return aux;
}

inline double checked_reveal(PointOracle& oracle, const Interval& iv) {
    const double x = oracle.reveal(iv.id);
    if (!iv.contains_point(x))
        throw OracleViolation("oracle placed point " + std::to_string(iv.id) + " at " + std::to_string(x) +
                              ", outside [" + std::to_string(iv.left) + ", " + std::to_string(iv.right) + "]");
    return x;
}

/// Turns a bottom slot into the point it stands for; no structural change.
inline void collapse_bottom(SortTree& tree, Handle leaf, PointOracle& oracle) {
    auto& payload = tree.leaf(leaf);
    if (payload.kind != SortLeaf::Kind::slot) return;
    payload.value = checked_reveal(oracle, Interval{payload.id, payload.left, payload.right});
    payload.kind = SortLeaf::Kind::point;
}

/// Finger search for `value` (tie-broken by `id`) starting at `start`.
inline Position finger_locate(const SortTree& tree, Handle start, double value, Id id, OpStats& stats) {
    return tree.locate(start, {value, static_cast<std::uint64_t>(id)}, stats);
}

/// Inserts the point next to a located leaf, collapsing a slot that the
/// point falls into. Returns the new leaf.
inline Handle insert_at(SortTree& tree, Position pos, Id id, double value, PointOracle& oracle, OpStats& stats) {
    const detail::SortTraits::Key key{value, static_cast<std::uint64_t>(id)};
    if (pos.side == Side::inside) {
        collapse_bottom(tree, pos.leaf, oracle);
        ++stats.value_comparisons;
        pos.side = detail::SortTraits::place(tree.leaf(pos.leaf), key) < 0 ? Side::before : Side::after;
    }
    return tree.insert_adjacent(pos.leaf, pos.side == Side::after, SortLeaf{SortLeaf::Kind::point, id, value, 0, 0},
                                stats);
}

struct SortResult {
    SortTree tree;
    std::vector<Handle> leaf_of;
    OpStats stats;
};

struct SortOptions {
    bool audit_each_step = false;  // full tree audit after every insertion
};

/// Inserts every non-bottom point in π order, each located from its anchor.
/// Bottom slots that are never reached stay uncollapsed.
inline SortResult reconstruct_sort(SortAux aux, PointOracle& oracle, SortOptions options = {}) {
    const RegionSet& set = aux.set;
    if (oracle.size() != set.size()) throw InvalidInput("oracle does not cover every interval");
    SortResult out{std::move(aux.tree), std::move(aux.leaf_of), {}};
    const std::uint64_t reveals_before = oracle.reveals();
    for (Id id : aux.pi.order) {
        if (aux.is_bottom[id]) continue;
        const Id anchor = *aux.anchor[id];
        Handle start = out.leaf_of[anchor];
        const auto& iv = set[id];
        if (aux.in_first_level[id])
            start = finger_locate(out.tree, start, iv.right, std::numeric_limits<Id>::max(), out.stats).leaf;
        const double x = checked_reveal(oracle, iv);
        const Position pos = finger_locate(out.tree, start, x, id, out.stats);
        out.leaf_of[id] = insert_at(out.tree, pos, id, x, oracle, out.stats);
        if (options.audit_each_step) {
            const auto problem = out.tree.audit();
            if (!problem.empty()) throw std::logic_error("tree audit failed: " + problem);
        }
    }
    out.stats.reveals = oracle.reveals() - reveals_before;
    return out;
}

/// The sorted (id, value) sequence; collapses every remaining slot.
inline std::vector<std::pair<Id, double>> materialize(SortTree& tree, PointOracle& oracle) {
    std::vector<std::pair<Id, double>> out;
    for (Handle h = tree.first_leaf(); h != kNil; h = tree.next(h)) {
        collapse_bottom(tree, h, oracle);
        const auto& leaf = tree.leaf(h);
        if (leaf.kind == SortLeaf::Kind::point) out.emplace_back(leaf.id, leaf.value);
    }
    return out;
}

}  // namespace imprecise
