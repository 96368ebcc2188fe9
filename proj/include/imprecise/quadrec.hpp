#pragma once

// One-dimensional quadtree pipeline. Preprocessing builds a compressed,
// smooth dyadic tree holding every interval's neighborhood, registers the
// bottom intervals as residents of the leaves they cross, and indexes the
// leaves with a Fibonacci-shaped leaf tree that serves as the point-location
// structure. Reconstruction inserts the remaining points so that every leaf
// ends up with at most two residents.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "imprecise/ambiguity.hpp"
#include "imprecise/core.hpp"
#include "imprecise/detail/leaf_tree.hpp"
#include "imprecise/partitions.hpp"

namespace imprecise {

inline constexpr unsigned kMaxCellDepth = 52;
inline constexpr unsigned kCompressionThreshold = 2;  // α
inline constexpr std::size_t kDeflation = 2;         // λ

/// [index·2^-depth, (index+1)·2^-depth) inside the normalized box [0,1).
struct DyadicCell {
    unsigned depth = 0;
    std::uint64_t index = 0;

    double start() const { return std::ldexp(static_cast<double>(index), -static_cast<int>(depth)); }
    double end() const { return std::ldexp(static_cast<double>(index + 1), -static_cast<int>(depth)); }
    double size() const { return std::ldexp(1.0, -static_cast<int>(depth)); }
    DyadicCell parent() const { return {depth - 1, index >> 1}; }
    DyadicCell child(unsigned side) const { return {depth + 1, 2 * index + side}; }
    /// Which half of this cell holds `inner` (inner strictly below).
    unsigned side_of(const DyadicCell& inner) const {
        return static_cast<unsigned>((inner.index >> (inner.depth - depth - 1)) & 1u);
    }
    bool contains(const DyadicCell& other) const {
        return other.depth >= depth && (other.index >> (other.depth - depth)) == index;
    }
    friend bool operator==(const DyadicCell&, const DyadicCell&) = default;
};

/// Smallest cell containing both.
inline DyadicCell common_ancestor(const DyadicCell& a, const DyadicCell& b) {
    const unsigned depth = std::min(a.depth, b.depth);
    const std::uint64_t ia = a.index >> (a.depth - depth);
    const std::uint64_t ib = b.index >> (b.depth - depth);
    const auto up = static_cast<unsigned>(std::bit_width(ia ^ ib));
    return {depth - up, ia >> up};
}

/// Affine map of the bbox onto [0, 1].
struct UnitMap {
    double lo = 0.0;
    double hi = 1.0;

    static constexpr double kLastPoint = 1.0 - 0x1p-53;

    double operator()(double x) const {
        if (!(hi > lo)) return 0.0;
        return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
    }
    /// Coordinate of a point; the right end of the box joins the last cell.
    double point(double x) const { return std::min((*this)(x), kLastPoint); }
};

inline DyadicCell finest_cell(double t) {
    return {kMaxCellDepth, static_cast<std::uint64_t>(std::ldexp(std::min(t, UnitMap::kLastPoint), kMaxCellDepth))};
}

/// Largest dyadic cell inside [a, b] (normalized) that holds the center;
/// zero-length or tiny intervals get the finest cell at the center.
inline DyadicCell storing_cell_normalized(double a, double b) {
    const double center = std::min(a + 0.5 * (b - a), UnitMap::kLastPoint);
    for (unsigned d = 0; d <= kMaxCellDepth; ++d) {
        const DyadicCell c{d, static_cast<std::uint64_t>(std::ldexp(center, static_cast<int>(d)))};
        if (c.start() >= a && c.end() <= b) return c;
    }
    return finest_cell(center);
}

inline std::vector<DyadicCell> neighborhood_normalized(double a, double b) {
    const DyadicCell c = storing_cell_normalized(a, b);
    const std::uint64_t last = (std::uint64_t{1} << c.depth) - 1;
    const auto first = static_cast<std::uint64_t>(std::ldexp(a, static_cast<int>(c.depth)));
    const auto final = std::min(static_cast<std::uint64_t>(std::ldexp(b, static_cast<int>(c.depth))), last);
    std::vector<DyadicCell> out;
    for (std::uint64_t k = std::min(first, last); k <= final; ++k) out.push_back({c.depth, k});
    return out;
}

inline DyadicCell storing_cell(const BoundingBox& bbox, const Interval& r) {
    const UnitMap map{bbox.lo, bbox.hi};
    return storing_cell_normalized(map(r.left), map(r.right));
}

/// Cells at the storing cell's depth that meet r (at most 6).
inline std::vector<DyadicCell> neighborhood(const BoundingBox& bbox, const Interval& r) {
    const UnitMap map{bbox.lo, bbox.hi};
    return neighborhood_normalized(map(r.left), map(r.right));
}

struct QuadLeaf {
    enum class Kind : std::uint8_t { cell, gap, dummy };
    Kind kind = Kind::dummy;
    DyadicCell cell{};
    double start = std::numeric_limits<double>::infinity();
    double end = std::numeric_limits<double>::infinity();
    std::uint32_t link = 0;       // gap leaves: the compressed link they belong to
    std::uint32_t component = 0;  // cell leaves: smoothness is only enforced within one
    std::vector<Id> residents;

    static QuadLeaf of_cell(DyadicCell c, std::uint32_t component) {
        QuadLeaf leaf;
        leaf.kind = Kind::cell;
        leaf.cell = c;
        leaf.start = c.start();
        leaf.end = c.end();
        leaf.component = component;
        return leaf;
    }
    static QuadLeaf of_gap(double start, double end, std::uint32_t link) {
        QuadLeaf leaf;
        leaf.kind = Kind::gap;
        leaf.start = start;
        leaf.end = end;
        leaf.link = link;
        return leaf;
    }
};

namespace detail {

struct QuadTraits {
    using Key = double;
    using Router = double;
    using Leaf = QuadLeaf;

    static int place(const Leaf& leaf, double q) {
        if (leaf.kind == Leaf::Kind::dummy || q < leaf.start) return -1;
        if (q >= leaf.end) return 1;
        return 0;
    }
    static bool goes_left(double q, double router) { return q < router; }
    static double router_after(const Leaf& leaf) { return leaf.end; }
    static bool left_of(const Leaf& leaf, double router) { return leaf.end <= router; }
    static bool is_dummy(const Leaf& leaf) { return leaf.kind == Leaf::Kind::dummy; }
    static Leaf dummy() { return {}; }
};

}  // namespace detail

using QuadIndex = detail::LeafTree<detail::QuadTraits>;
using detail::Handle;
using detail::kNil;

/// A half of `upper` holding `lower` deeper down; the rest of that half is
/// represented by at most two gap leaves instead of a path of empty cells.
struct CompressedLink {
    DyadicCell upper;
    DyadicCell lower;
    Handle left_gap = kNil;
    Handle right_gap = kNil;
    std::uint32_t upper_component = 0;
    std::uint32_t lower_component = 0;
    bool alive = true;
};

class CompressedQuadtree {
public:
    CompressedQuadtree() = default;

    /// Region quadtree over the neighborhoods of `set`; `bottoms` become
    /// interval residents of the leaves they cross.
    CompressedQuadtree(const RegionSet& set, const std::vector<Id>& bottoms) : map_{set.bbox().lo, set.bbox().hi} {
        const std::size_t n = set.size();
        value_.assign(n, 0.0);
        revealed_.assign(n, false);
        span_.resize(n);
        for (const auto& iv : set.intervals())
            span_[iv.id] = {std::min(map_(iv.left), UnitMap::kLastPoint), std::min(map_(iv.right), UnitMap::kLastPoint)};
        build(set, bottoms);
    }

    const UnitMap& unit_map() const { return map_; }
    const QuadIndex& index() const { return index_; }
    const std::vector<CompressedLink>& links() const { return links_; }
    const QuadLeaf& leaf(Handle h) const { return index_.leaf(h); }
    std::size_t leaf_count() const { return index_.leaf_count() - dummies_; }
    std::size_t node_count() const { return leaf_count() + internal_; }
    bool revealed(Id id) const { return revealed_[id]; }
    double value(Id id) const { return value_[id]; }
    std::pair<double, double> normalized_span(Id id) const { return span_[id]; }

    std::uint32_t component(std::uint32_t c) const {
        while (component_parent_[c] != c) c = component_parent_[c];
        return c;
    }

    /// Leaf holding the normalized coordinate t, found by finger search.
    Handle locate(Handle start, double t, OpStats& stats) const { return index_.locate(start, t, stats).leaf; }

    /// Residents still living in `h`: unrevealed intervals and points whose
    /// value lies in the span, each once.
    std::vector<Id> live_residents(Handle h) const {
        const auto& leaf = index_.leaf(h);
        std::vector<Id> out;
        for (Id id : leaf.residents)
            if (!revealed_[id] || (value_[id] >= leaf.start && value_[id] < leaf.end)) out.push_back(id);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    /// Number of resident tokens: distinct finest cells among the points in
    /// this leaf plus unrevealed bottom intervals.
    std::size_t resident_count(Handle h) const {
        std::vector<std::uint64_t> tokens;
        const auto& leaf = index_.leaf(h);
        for (Id id : leaf.residents) {
            if (revealed_[id]) {
                if (value_[id] >= leaf.start && value_[id] < leaf.end) tokens.push_back(finest_cell(value_[id]).index);
            } else {
                tokens.push_back(bottom_token(id));
            }
        }
        std::sort(tokens.begin(), tokens.end());
        return static_cast<std::size_t>(std::unique(tokens.begin(), tokens.end()) - tokens.begin());
    }

    /// Reveals every unrevealed interval resident of `h`. The revealed points
    /// already sit in the leaves containing them, so nothing moves.
    void collapse_residents(Handle h, PointOracle& oracle, const RegionSet& set) {
        for (Id id : index_.leaf(h).residents)
            if (!revealed_[id]) reveal(id, oracle, set);
    }

    void reveal(Id id, PointOracle& oracle, const RegionSet& set) {
        const auto& iv = set[id];
        const double x = oracle.reveal(id);
        if (!iv.contains_point(x))
            throw OracleViolation("oracle placed point " + std::to_string(id) + " outside its interval");
        value_[id] = map_.point(x);
        revealed_[id] = true;
    }

    /// Adds a revealed point to the leaf containing it and splits until every
    /// leaf is back to at most λ residents. Returns the leaf holding the point.
    Handle insert_point(Handle h, Id id, double x, PointOracle& oracle, const RegionSet& set, OpStats& stats) {
        const double t = map_.point(x);
        value_[id] = t;
        revealed_[id] = true;
        if (detail::QuadTraits::place(index_.leaf(h), t) != 0)
            throw InvalidInput("insert_point: value lies outside the given leaf");
        if (index_.leaf(h).kind == QuadLeaf::Kind::gap) h = carve(h, t, stats);
        index_.leaf(h).residents.push_back(id);
        settle(h, oracle, set, stats);
        return index_.locate(h, t, stats).leaf;
    }

    /// Low-level: append a resident without any rebalancing (audits, tests).
    void add_resident_unchecked(Handle h, Id id, double t) {
        value_[id] = t;
        revealed_[id] = true;
        index_.leaf(h).residents.push_back(id);
    }

    Handle first_leaf() const { return index_.first_leaf(); }
    Handle next(Handle h) const {
        const Handle n = index_.next(h);
        return n != kNil && index_.leaf(n).kind == QuadLeaf::Kind::dummy ? kNil : n;
    }
    Handle prev(Handle h) const { return index_.prev(h); }

    /// Leaf whose span starts at `t`, by plain search (preprocessing only).
    Handle leaf_starting_at(double t) const {
        OpStats scratch;
        return index_.find(t, scratch).leaf;
    }

    /// Empty string when every structural invariant holds and every leaf has
    /// at most `lambda` resident tokens.
    std::string audit(std::size_t lambda) const {
        if (auto problem = index_.audit(); !problem.empty()) return "leaf index: " + problem;
        double cursor = 0.0;
        bool dummies = false;
        Handle previous = kNil;
        for (Handle h = index_.first_leaf(); h != kNil; h = index_.next(h)) {
            const auto& leaf = index_.leaf(h);
            if (index_.prev(h) != previous) return "neighbor links inconsistent";
            previous = h;
            if (leaf.kind == QuadLeaf::Kind::dummy) {
                dummies = true;
                continue;
            }
            if (dummies) return "real leaf after a dummy";
            if (leaf.start != cursor || !(leaf.end > leaf.start)) return "leaf spans do not tile [0,1)";
            cursor = leaf.end;
            if (leaf.kind == QuadLeaf::Kind::cell && (leaf.start != leaf.cell.start() || leaf.end != leaf.cell.end()))
                return "cell leaf span differs from its cell";
            if (resident_count(h) > lambda)
                return "leaf at [" + std::to_string(leaf.start) + ", " + std::to_string(leaf.end) + ") holds " +
                       std::to_string(resident_count(h)) + " residents";
            const Handle nb = index_.next(h);
            if (nb != kNil && !smooth_pair(leaf, index_.leaf(nb))) return "adjacent leaves violate smoothness";
        }
        if (cursor != 1.0) return "leaf spans do not reach 1";
        return "";
    }

private:
    std::uint64_t bottom_token(Id id) const {
        const auto [a, b] = span_[id];
        const DyadicCell ca = finest_cell(a);
        if (finest_cell(b) == ca) return ca.index;
        return (std::uint64_t{1} << 63) | id;
    }

    bool smooth_pair(const QuadLeaf& x, const QuadLeaf& y) const {
        if (x.kind != QuadLeaf::Kind::cell || y.kind != QuadLeaf::Kind::cell) return true;
        if (component(x.component) != component(y.component)) return true;
        const int dx = static_cast<int>(x.cell.depth);
        const int dy = static_cast<int>(y.cell.depth);
        return dx - dy <= 1 && dy - dx <= 1;
    }

    std::uint32_t new_component() {
        const auto c = static_cast<std::uint32_t>(component_parent_.size());
        component_parent_.push_back(c);
        return c;
    }
    void merge_components(std::uint32_t a, std::uint32_t b) {
        a = component(a);
        b = component(b);
        if (a != b) component_parent_[a] = b;
    }

    bool meets(Id id, const QuadLeaf& piece) const {
        if (revealed_[id]) return value_[id] >= piece.start && value_[id] < piece.end;
        const auto [a, b] = span_[id];
        return piece.start <= b && a < piece.end;
    }

    /// Cells hanging off the path from `top` down to (excluding) `lower` on
    /// one side, left to right.
    static std::vector<DyadicCell> path_siblings(DyadicCell top, DyadicCell lower, bool left_side) {
        std::vector<DyadicCell> out;
        for (DyadicCell p = top; p.depth < lower.depth; p = p.child(p.side_of(lower))) {
            const unsigned toward = p.side_of(lower);
            if ((toward == 1) == left_side) out.push_back(p.child(1 - toward));
        }
        if (!left_side) std::reverse(out.begin(), out.end());
        return out;
    }

    /// Leaves covering top minus lower on one side: one gap leaf when the
    /// path is compressed, the sibling cells otherwise.
    static void region_pieces(std::vector<QuadLeaf>& out, DyadicCell top, DyadicCell lower, bool compressed,
                              std::uint32_t link, std::uint32_t component, bool left_side) {
        if (compressed) {
            const double s = left_side ? top.start() : lower.end();
            const double e = left_side ? lower.start() : top.end();
            if (s < e) out.push_back(QuadLeaf::of_gap(s, e, link));
            return;
        }
        for (const auto& c : path_siblings(top, lower, left_side)) out.push_back(QuadLeaf::of_cell(c, component));
    }

    // Replaces leaf h by the given pieces (which tile its span, left to right),
    // handing each resident to the pieces it belongs to. The first piece keeps
    // the handle.
    std::vector<Handle> replace(Handle h, std::vector<QuadLeaf> pieces, OpStats& stats) {
        std::vector<Id> residents = std::move(index_.leaf(h).residents);
        std::sort(residents.begin(), residents.end());
        residents.erase(std::unique(residents.begin(), residents.end()), residents.end());
        for (auto& piece : pieces)
            for (Id id : residents)
                if (meets(id, piece)) piece.residents.push_back(id);
        std::vector<Handle> handles{h};
        index_.leaf(h) = std::move(pieces.front());
        for (std::size_t k = 1; k < pieces.size(); ++k)
            handles.push_back(index_.insert_adjacent(handles.back(), true, std::move(pieces[k]), stats));
        for (std::size_t k = 0; k < handles.size(); ++k) {
            const auto& leaf = index_.leaf(handles[k]);
            if (leaf.kind != QuadLeaf::Kind::gap) continue;
            auto& link = links_[leaf.link];
            (leaf.end <= link.lower.start() ? link.left_gap : link.right_gap) = handles[k];
        }
        return handles;
    }

    std::vector<Handle> split_cell(Handle h, OpStats& stats) {
        const auto& leaf = index_.leaf(h);
        const std::uint32_t comp = leaf.component;
        const DyadicCell c = leaf.cell;
        ++internal_;
        ++stats.splits;
        return replace(h, {QuadLeaf::of_cell(c.child(0), comp), QuadLeaf::of_cell(c.child(1), comp)}, stats);
    }

    // Splits an overfull cell leaf whose residents are all points. When the
    // points sit more than α empty levels below, the empty path is
    // compressed and the cell holding them is split directly.
    std::vector<Handle> split_for_points(Handle h, OpStats& stats) {
        const auto& leaf = index_.leaf(h);
        std::optional<DyadicCell> lo, hi;
        for (Id id : leaf.residents) {
            if (!revealed_[id] || !(value_[id] >= leaf.start && value_[id] < leaf.end)) continue;
            const DyadicCell c = finest_cell(value_[id]);
            if (!lo || c.index < lo->index) lo = c;
            if (!hi || c.index > hi->index) hi = c;
        }
        const DyadicCell u = leaf.cell;
        const DyadicCell target = common_ancestor(*lo, *hi);
        if (target.depth <= u.depth + 1 + kCompressionThreshold) return split_cell(h, stats);

        const std::uint32_t comp = leaf.component;
        const std::uint32_t inner = new_component();
        const auto link = static_cast<std::uint32_t>(links_.size());
        links_.push_back({u, target, kNil, kNil, comp, inner, true});
        const unsigned side = u.side_of(target);
        const DyadicCell half = u.child(side);
        std::vector<QuadLeaf> pieces;
        if (side == 1) pieces.push_back(QuadLeaf::of_cell(u.child(0), comp));
        region_pieces(pieces, half, target, true, link, comp, true);
        pieces.push_back(QuadLeaf::of_cell(target.child(0), inner));
        pieces.push_back(QuadLeaf::of_cell(target.child(1), inner));
        region_pieces(pieces, half, target, true, link, comp, false);
        if (side == 0) pieces.push_back(QuadLeaf::of_cell(u.child(1), comp));
        internal_ += 2;
        ++stats.splits;
        return replace(h, std::move(pieces), stats);
    }

    // A point arrived inside a gap: materialize the cell that holds it at the
    // depth where its path leaves the compressed one, and re-split both gaps
    // of the link around that cell. Returns the new cell leaf.
    Handle carve(Handle gap, double t, OpStats& stats) {
        const std::uint32_t id = index_.leaf(gap).link;
        const CompressedLink old = links_[id];
        const DyadicCell u = old.upper;
        const DyadicCell v = old.lower;
        const DyadicCell half = u.child(u.side_of(v));
        const DyadicCell p = common_ancestor(finest_cell(t), v);
        const unsigned toward_v = p.side_of(v);
        const DyadicCell w = p.child(1 - toward_v);
        const DyadicCell a = p.child(toward_v);

        const bool upper_path = p.depth > half.depth;
        const bool upper_compressed = upper_path && p.depth - u.depth - 1 > kCompressionThreshold;
        const bool lower_path = v.depth > a.depth;
        const bool lower_compressed = lower_path && v.depth - p.depth - 1 > kCompressionThreshold;

        const std::uint32_t cu = old.upper_component;
        const std::uint32_t cp = upper_compressed ? new_component() : cu;
        if (!lower_compressed) merge_components(old.lower_component, cp);

        links_[id].alive = false;
        std::uint32_t upper_link = id;
        std::uint32_t lower_link = id;
        if (upper_compressed) {
            links_[id] = {u, p, kNil, kNil, cu, cp, true};
        }
        if (lower_compressed) {
            lower_link = upper_compressed ? static_cast<std::uint32_t>(links_.size()) : id;
            CompressedLink next{p, v, kNil, kNil, cp, old.lower_component, true};
            if (lower_link == id) {
                links_[id] = next;
            } else {
                links_.push_back(next);
            }
        }
        ++internal_;
        if (upper_path && !upper_compressed) internal_ += p.depth - u.depth - 1;
        if (lower_path && !lower_compressed) internal_ += v.depth - p.depth - 1;
        ++stats.splits;

        // everything in `half` except v, left to right
        std::vector<QuadLeaf> pieces;
        if (upper_path) region_pieces(pieces, half, p, upper_compressed, upper_link, cu, true);
        if (toward_v == 1) pieces.push_back(QuadLeaf::of_cell(w, cp));
        if (lower_path) region_pieces(pieces, a, v, lower_compressed, lower_link, cp, true);
        const std::size_t split_at = pieces.size();
        if (lower_path) region_pieces(pieces, a, v, lower_compressed, lower_link, cp, false);
        if (toward_v == 0) pieces.push_back(QuadLeaf::of_cell(w, cp));
        if (upper_path) region_pieces(pieces, half, p, upper_compressed, upper_link, cu, false);

        std::vector<QuadLeaf> left(std::make_move_iterator(pieces.begin()),
                                   std::make_move_iterator(pieces.begin() + static_cast<std::ptrdiff_t>(split_at)));
        std::vector<QuadLeaf> right(std::make_move_iterator(pieces.begin() + static_cast<std::ptrdiff_t>(split_at)),
                                    std::make_move_iterator(pieces.end()));
        std::vector<Handle> fresh;
        if (!left.empty()) {
            auto hs = replace(old.left_gap, std::move(left), stats);
            fresh.insert(fresh.end(), hs.begin(), hs.end());
        }
        if (!right.empty()) {
            auto hs = replace(old.right_gap, std::move(right), stats);
            fresh.insert(fresh.end(), hs.begin(), hs.end());
        }
        Handle holder = kNil;
        for (Handle h : fresh) {
            const auto& leaf = index_.leaf(h);
            if (leaf.kind == QuadLeaf::Kind::cell && leaf.cell == w) holder = h;
        }
        if (!lower_compressed) {
            // v's component just merged into p's; its outer leaves now answer
            // to neighbors that were exempt before
            const Handle first = index_.locate(holder, v.start(), stats).leaf;
            fresh.push_back(first);
            if (index_.prev(first) != kNil) fresh.push_back(index_.prev(first));
            if (v.end() < 1.0) {
                const Handle after = index_.locate(holder, v.end(), stats).leaf;
                fresh.push_back(after);
                fresh.push_back(index_.prev(after));
            }
        }
        repair_smoothness(fresh, stats);
        // smoothing may have split w; its left part kept the handle
        return index_.locate(holder, t, stats).leaf;
    }

    // Splits coarse neighbors (or the leaf itself) until every adjacent pair
    // of cell leaves in one component differs by at most one level.
    void repair_smoothness(std::vector<Handle> work, OpStats& stats) {
        while (!work.empty()) {
            const Handle h = work.back();
            work.pop_back();
            if (index_.leaf(h).kind != QuadLeaf::Kind::cell) continue;
            for (const Handle nb : {index_.prev(h), index_.next(h)}) {
                if (nb == kNil) continue;
                const auto& x = index_.leaf(h);
                const auto& y = index_.leaf(nb);
                if (smooth_pair(x, y)) continue;
                const Handle coarse = x.cell.depth < y.cell.depth ? h : nb;
                auto halves = split_cell(coarse, stats);
                work.insert(work.end(), halves.begin(), halves.end());
                if (coarse != h) work.push_back(h);
                break;
            }
        }
    }

    // Restores the λ bound starting from a leaf that just gained a point.
    void settle(Handle h, PointOracle& oracle, const RegionSet& set, OpStats& stats) {
        std::vector<Handle> work{h};
        while (!work.empty()) {
            const Handle x = work.back();
            work.pop_back();
            if (resident_count(x) <= kDeflation) continue;
            collapse_residents(x, oracle, set);
            if (resident_count(x) <= kDeflation) continue;
            const double end = index_.leaf(x).end;
            if (index_.leaf(x).kind == QuadLeaf::Kind::gap) {
                // only reachable through hand-built residents
                const auto& leaf = index_.leaf(x);
                const auto it = std::find_if(leaf.residents.begin(), leaf.residents.end(), [&](Id id) {
                    return value_[id] >= leaf.start && value_[id] < leaf.end;
                });
                carve(x, value_[*it], stats);
            } else {
                repair_smoothness(split_for_points(x, stats), stats);
            }
            // the first piece kept the handle; recheck everything in the old span
            for (Handle p = x; p != kNil && index_.leaf(p).start < end; p = index_.next(p)) work.push_back(p);
        }
    }

    void build(const RegionSet& set, const std::vector<Id>& bottoms) {
        component_parent_.clear();
        new_component();

        // neighborhood cells plus the root, in preorder, closed under LCA
        auto preorder = [](const DyadicCell& a, const DyadicCell& b) {
            const std::uint64_t pa = a.index << (kMaxCellDepth - a.depth);
            const std::uint64_t pb = b.index << (kMaxCellDepth - b.depth);
            if (pa != pb) return pa < pb;
            return a.depth < b.depth;
        };
        std::vector<DyadicCell> cells{DyadicCell{0, 0}};
        for (const auto& iv : set.intervals()) {
            const auto nb = neighborhood_normalized(map_(iv.left), map_(iv.right));
            cells.insert(cells.end(), nb.begin(), nb.end());
        }
        std::sort(cells.begin(), cells.end(), preorder);
        cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
        const std::size_t base = cells.size();
        for (std::size_t k = 1; k < base; ++k) cells.push_back(common_ancestor(cells[k - 1], cells[k]));
        std::sort(cells.begin(), cells.end(), preorder);
        cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

        struct Node {
            DyadicCell cell;
            std::size_t child[2] = {kNone, kNone};
        };
        std::vector<Node> nodes;
        nodes.reserve(cells.size());
        std::vector<std::size_t> stack;
        for (const auto& c : cells) {
            nodes.push_back({c});
            while (!stack.empty() && !nodes[stack.back()].cell.contains(c)) stack.pop_back();
            if (!stack.empty()) {
                auto& parent = nodes[stack.back()];
                const unsigned side = parent.cell.side_of(c);
                if (parent.child[side] != kNone) throw std::logic_error("cell set is not closed under LCA");
                parent.child[side] = nodes.size() - 1;
            }
            stack.push_back(nodes.size() - 1);
        }

        std::vector<QuadLeaf> leaves;
        std::vector<std::uint32_t> link_of_leaf;
        auto emit = [&](auto&& self, std::size_t at, std::uint32_t comp) -> void {
            const Node& node = nodes[at];
            if (node.child[0] == kNone && node.child[1] == kNone) {
                leaves.push_back(QuadLeaf::of_cell(node.cell, comp));
                return;
            }
            ++internal_;
            for (unsigned side = 0; side < 2; ++side) {
                const DyadicCell half = node.cell.child(side);
                const std::size_t below = node.child[side];
                if (below == kNone) {
                    leaves.push_back(QuadLeaf::of_cell(half, comp));
                    continue;
                }
                const DyadicCell v = nodes[below].cell;
                if (v == half) {
                    self(self, below, comp);
                    continue;
                }
                const unsigned gap = v.depth - node.cell.depth - 1;
                if (gap <= kCompressionThreshold) {
                    internal_ += gap;
                    region_pieces(leaves, half, v, false, 0, comp, true);
                    self(self, below, comp);
                    region_pieces(leaves, half, v, false, 0, comp, false);
                    continue;
                }
                const std::uint32_t inner = new_component();
                const auto link = static_cast<std::uint32_t>(links_.size());
                links_.push_back({node.cell, v, kNil, kNil, comp, inner, true});
                region_pieces(leaves, half, v, true, link, comp, true);
                self(self, below, inner);
                region_pieces(leaves, half, v, true, link, comp, false);
            }
        };
        emit(emit, 0, 0);
        smooth_list(leaves);

        // bottoms as interval residents of every leaf they cross
        std::vector<double> starts(leaves.size());
        for (std::size_t k = 0; k < leaves.size(); ++k) starts[k] = leaves[k].start;
        for (Id b : bottoms) {
            const auto [a, e] = span_[b];
            auto k = static_cast<std::size_t>(std::upper_bound(starts.begin(), starts.end(), a) - starts.begin()) - 1;
            for (; k < leaves.size() && leaves[k].start <= e; ++k) leaves[k].residents.push_back(b);
        }

        for (const auto& leaf : leaves) {
            std::vector<std::uint64_t> tokens;
            for (Id b : leaf.residents) tokens.push_back(bottom_token(b));
            std::sort(tokens.begin(), tokens.end());
            if (std::unique(tokens.begin(), tokens.end()) - tokens.begin() > static_cast<std::ptrdiff_t>(kDeflation))
                throw std::logic_error("bottom intervals exceed the leaf capacity after preprocessing");
        }

        const std::size_t real = leaves.size();
        const auto handles = index_.build_fibonacci(std::move(leaves));
        dummies_ = index_.leaf_count() - real;
        for (Handle h : handles) {
            const auto& leaf = index_.leaf(h);
            if (leaf.kind != QuadLeaf::Kind::gap) continue;
            auto& link = links_[leaf.link];
            (leaf.end <= link.lower.start() ? link.left_gap : link.right_gap) = h;
        }
    }

    // Smoothing over the initial leaf sequence, before the index exists.
    void smooth_list(std::vector<QuadLeaf>& leaves) {
        struct Entry {
            QuadLeaf leaf;
            std::size_t prev, next;
        };
        std::vector<Entry> list;
        list.reserve(2 * leaves.size());
        for (std::size_t k = 0; k < leaves.size(); ++k)
            list.push_back({std::move(leaves[k]), k == 0 ? kNone : k - 1, k + 1 == leaves.size() ? kNone : k + 1});
        std::vector<std::size_t> work(list.size());
        std::iota(work.begin(), work.end(), std::size_t{0});
        auto split = [&](std::size_t at) {
            const DyadicCell c = list[at].leaf.cell;
            const std::uint32_t comp = list[at].leaf.component;
            const std::size_t right = list.size();
            list.push_back({QuadLeaf::of_cell(c.child(1), comp), at, list[at].next});
            if (list[at].next != kNone) list[list[at].next].prev = right;
            list[at].next = right;
            list[at].leaf = QuadLeaf::of_cell(c.child(0), comp);
            ++internal_;
            work.push_back(at);
            work.push_back(right);
        };
        while (!work.empty()) {
            const std::size_t at = work.back();
            work.pop_back();
            if (list[at].leaf.kind != QuadLeaf::Kind::cell) continue;
            for (const std::size_t nb : {list[at].prev, list[at].next}) {
                if (nb == kNone || smooth_pair(list[at].leaf, list[nb].leaf)) continue;
                const bool self_coarse = list[at].leaf.cell.depth < list[nb].leaf.cell.depth;
                split(self_coarse ? at : nb);
                if (!self_coarse) work.push_back(at);
                break;
            }
        }
        leaves.clear();
        for (std::size_t at = 0; at != kNone; at = list[at].next) leaves.push_back(std::move(list[at].leaf));
    }

    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

    UnitMap map_;
    QuadIndex index_;
    std::vector<CompressedLink> links_;
    std::vector<std::uint32_t> component_parent_;
    std::vector<double> value_;
    std::vector<bool> revealed_;
    std::vector<std::pair<double, double>> span_;
    std::size_t internal_ = 0;
    std::size_t dummies_ = 0;
};

inline CompressedQuadtree build_region_quadtree(const RegionSet& set, const std::vector<Id>& bottoms) {
    return CompressedQuadtree(set, bottoms);
}

/// Bottoms taken from the level permutation.
inline CompressedQuadtree build_region_quadtree(const RegionSet& set) {
    return CompressedQuadtree(set, bottom_set(set, level_permutation(set)));
}

struct QuadAux {
    RegionSet set;
    Permutation pi;
    std::vector<Id> bottoms;
    std::vector<bool> is_bottom;
    std::vector<DyadicCell> storing;
    std::vector<Handle> anchor;  // leftmost leaf inside the storing cell
    CompressedQuadtree tree;
};

inline QuadAux preprocess_quadtree(const RegionSet& set) {
    QuadAux aux;
    aux.set = set;
    aux.pi = level_permutation(set);
    aux.bottoms = bottom_set(set, aux.pi);
    aux.is_bottom.assign(set.size(), false);
    for (Id b : aux.bottoms) aux.is_bottom[b] = true;
    aux.tree = build_region_quadtree(set, aux.bottoms);
    aux.storing.reserve(set.size());
    aux.anchor.reserve(set.size());
    for (const auto& iv : set.intervals()) {
        aux.storing.push_back(storing_cell(set.bbox(), iv));
        aux.anchor.push_back(aux.tree.leaf_starting_at(aux.storing.back().start()));
    }
    return aux;
}

/// Leaf containing q for interval i, by finger search from i's anchor.
inline Handle locate(const QuadAux& aux, Id i, double q, OpStats& stats) {
    if (!aux.set[i].contains_point(q)) throw InvalidInput("locate: query lies outside the interval");
    return aux.tree.locate(aux.anchor[i], aux.tree.unit_map().point(q), stats);
}

struct QuadStep {
    Id id = 0;
    std::size_t contact = 0;      // |Γ^π_i|
    std::size_t overlapping = 0;  // leaves meeting R_i when i is processed
};

struct QuadResult {
    CompressedQuadtree tree;
    OpStats stats;
    std::vector<QuadStep> steps;  // filled when requested
};

struct QuadOptions {
    bool record_steps = false;
    bool audit_each_step = false;
};

/// Inserts each non-bottom point in π order; bottoms stay interval residents
/// unless a point lands in their leaf.
inline QuadResult reconstruct_quadtree(QuadAux aux, PointOracle& oracle, QuadOptions options = {}) {
    const RegionSet& set = aux.set;
    if (oracle.size() != set.size()) throw InvalidInput("oracle does not cover every interval");
    QuadResult out{std::move(aux.tree), {}, {}};
    std::vector<std::size_t> contact;
    if (options.record_steps) contact = contact_profile(set, aux.pi).sizes;
    const std::uint64_t reveals_before = oracle.reveals();
    for (std::size_t k = 0; k < aux.pi.size(); ++k) {
        const Id id = aux.pi.order[k];
        if (aux.is_bottom[id]) continue;
        const auto& iv = set[id];
        const double x = oracle.reveal(id);
        if (!iv.contains_point(x)) throw OracleViolation("oracle placed point " + std::to_string(id) + " outside its interval");
        const Handle leaf = out.tree.locate(aux.anchor[id], out.tree.unit_map().point(x), out.stats);
        if (options.record_steps) {
            const auto [a, b] = out.tree.normalized_span(id);
            std::size_t count = 0;
            for (Handle h = leaf; h != kNil && out.tree.leaf(h).start <= b; h = out.tree.next(h)) ++count;
            for (Handle h = out.tree.prev(leaf); h != kNil && out.tree.leaf(h).end > a; h = out.tree.prev(h)) ++count;
            out.steps.push_back({id, contact[k], count});
        }
        out.tree.insert_point(leaf, id, x, oracle, set, out.stats);
        if (options.audit_each_step) {
            const auto problem = out.tree.audit(kDeflation);
            if (!problem.empty()) throw std::logic_error("quadtree audit failed: " + problem);
        }
    }
    out.stats.reveals = oracle.reveals() - reveals_before;
    return out;
}

/// λ-deflation plus the structural audit (tiling, neighbor links, smoothness).
inline bool verify_deflation(const CompressedQuadtree& tree, std::size_t lambda = kDeflation) {
    return tree.audit(lambda).empty();
}

/// Every revealed point of the given ids is listed in the leaf containing it.
inline bool points_in_place(const CompressedQuadtree& tree, const std::vector<Id>& ids) {
    for (Id id : ids) {
        if (!tree.revealed(id)) continue;
        OpStats scratch;
        const Handle h = tree.index().find(tree.value(id), scratch).leaf;
        const auto& res = tree.leaf(h).residents;
        if (std::find(res.begin(), res.end(), id) == res.end()) return false;
    }
    return true;
}

}  // namespace imprecise
