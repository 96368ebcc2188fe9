#pragma once

// Uncertainty intervals, processing orders and the per-run instrumentation
// shared by every pipeline in the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace imprecise {

using Id = std::size_t;

class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a point oracle hands back a value outside its interval.
class OracleViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Closed interval [left, right] carrying the id of its unknown point.
struct Interval {
    Id id = 0;
    double left = 0.0;
    double right = 0.0;

    double length() const { return right - left; }
    bool contains_point(double x) const { return left <= x && x <= right; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

enum class Relation { disjoint_left, disjoint_right, overlap, contains, contained_by, equal };

inline const char* to_string(Relation r) {
    switch (r) {
        case Relation::disjoint_left: return "disjoint_left";
        case Relation::disjoint_right: return "disjoint_right";
        case Relation::overlap: return "overlap";
        case Relation::contains: return "contains";
        case Relation::contained_by: return "contained_by";
        case Relation::equal: return "equal";
    }
    return "?";
}

inline bool intersects(const Interval& a, const Interval& b) {
    return a.left <= b.right && b.left <= a.right;
}

/// a ⊋ b: a covers b and differs from it in at least one endpoint.
inline bool strictly_contains(const Interval& a, const Interval& b) {
    return a.left <= b.left && b.right <= a.right && (a.left < b.left || b.right < a.right);
}

inline bool same_span(const Interval& a, const Interval& b) {
    return a.left == b.left && a.right == b.right;
}

inline Relation relate(const Interval& a, const Interval& b) {
    if (a.right < b.left) return Relation::disjoint_left;
    if (b.right < a.left) return Relation::disjoint_right;
    if (same_span(a, b)) return Relation::equal;
    if (strictly_contains(a, b)) return Relation::contains;
    if (strictly_contains(b, a)) return Relation::contained_by;
    return Relation::overlap;
}

struct BoundingBox {
    double lo = 0.0;
    double hi = 0.0;
    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// The uncertainty regions R. Ids are dense: intervals()[i].id == i.
class RegionSet {
public:
    RegionSet() = default;

    RegionSet(std::vector<Interval> intervals, BoundingBox bbox)
        : intervals_(std::move(intervals)), bbox_(bbox) {
        validate();
    }

    /// Builds a set whose bbox is the hull of the intervals.
    static RegionSet from_intervals(std::vector<Interval> intervals) {
        if (intervals.empty()) throw InvalidInput("region set must contain at least one interval");
        BoundingBox box{intervals.front().left, intervals.front().right};
        for (const auto& iv : intervals) {
            box.lo = std::min(box.lo, iv.left);
            box.hi = std::max(box.hi, iv.right);
        }
        return RegionSet(std::move(intervals), box);
    }

    /// Convenience for tests and generators: ids assigned in order.
    static RegionSet from_spans(std::span<const std::pair<double, double>> spans) {
        std::vector<Interval> out;
        out.reserve(spans.size());
        for (std::size_t i = 0; i < spans.size(); ++i) out.push_back({i, spans[i].first, spans[i].second});
        return from_intervals(std::move(out));
    }
    static RegionSet from_spans(std::initializer_list<std::pair<double, double>> spans) {
        return from_spans(std::span<const std::pair<double, double>>(spans.begin(), spans.size()));
    }

    std::size_t size() const { return intervals_.size(); }
    const std::vector<Interval>& intervals() const { return intervals_; }
    const Interval& operator[](Id id) const { return intervals_[id]; }
    const BoundingBox& bbox() const { return bbox_; }

private:
    void validate() {
        if (intervals_.empty()) throw InvalidInput("region set must contain at least one interval");
        if (!std::isfinite(bbox_.lo) || !std::isfinite(bbox_.hi) || bbox_.lo > bbox_.hi)
            throw InvalidInput("bbox must be finite with lo <= hi");
        std::vector<Interval> sorted(intervals_.size());
        std::vector<bool> seen(intervals_.size(), false);
        for (const auto& iv : intervals_) {
            if (iv.id >= intervals_.size() || seen[iv.id])
                throw InvalidInput("interval ids must be exactly 0..n-1 (id " + std::to_string(iv.id) + ")");
            seen[iv.id] = true;
            if (!std::isfinite(iv.left) || !std::isfinite(iv.right))
                throw InvalidInput("non-finite coordinate on interval " + std::to_string(iv.id));
            if (iv.left > iv.right)
                throw InvalidInput("interval " + std::to_string(iv.id) + " has left > right");
            if (iv.left < bbox_.lo || iv.right > bbox_.hi)
                throw InvalidInput("interval " + std::to_string(iv.id) + " lies outside the bbox");
            sorted[iv.id] = iv;
        }
        intervals_ = std::move(sorted);
    }

    std::vector<Interval> intervals_;
    BoundingBox bbox_;
};

/// Processing order: order[position] = id.
struct Permutation {
    std::vector<Id> order;

    std::size_t size() const { return order.size(); }

    static Permutation identity(std::size_t n) {
        Permutation p;
        p.order.resize(n);
        std::iota(p.order.begin(), p.order.end(), Id{0});
        return p;
    }

    /// position[id] for a valid permutation.
    std::vector<std::size_t> positions() const {
        std::vector<std::size_t> pos(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
        return pos;
    }

    void validate(std::size_t n) const {
        if (order.size() != n)
            throw InvalidInput("permutation has " + std::to_string(order.size()) + " entries, expected " +
                               std::to_string(n));
        std::vector<bool> seen(n, false);
        for (Id id : order) {
            if (id >= n || seen[id]) throw InvalidInput("permutation is not a bijection on 0..n-1");
            seen[id] = true;
        }
    }
    friend bool operator==(const Permutation&, const Permutation&) = default;
};

/// |Γ_i| per position of a processing order.
struct ContactProfile {
    std::vector<std::size_t> sizes;
};

/// Per-run operation counters. Reconstruction functions fill one of these.
struct OpStats {
    std::uint64_t value_comparisons = 0;
    std::uint64_t node_traversals = 0;
    std::uint64_t rotations = 0;
    std::uint64_t balance_changes = 0;
    std::uint64_t reveals = 0;
    std::uint64_t splits = 0;
    std::uint64_t insertions = 0;

    OpStats& operator+=(const OpStats& o) {
        value_comparisons += o.value_comparisons;
        node_traversals += o.node_traversals;
        rotations += o.rotations;
        balance_changes += o.balance_changes;
        reveals += o.reveals;
        splits += o.splits;
        insertions += o.insertions;
        return *this;
    }
    friend bool operator==(const OpStats&, const OpStats&) = default;
};

/// Hands out the hidden point x_i for an id, at most once per id as far as
/// the reveal counter is concerned.
class PointOracle {
public:
    using Source = std::function<double(Id)>;

    PointOracle(std::size_t n, Source source) : source_(std::move(source)), memo_(n) {}

    explicit PointOracle(std::vector<double> values)
        : memo_(values.size()) {
        auto shared = std::make_shared<std::vector<double>>(std::move(values));
        source_ = [shared](Id id) { return (*shared)[id]; };
    }

    double reveal(Id id) {
        if (id >= memo_.size()) throw InvalidInput("oracle has no point for id " + std::to_string(id));
        auto& slot = memo_[id];
        if (!slot) {
            slot = source_(id);
            ++reveals_;
        }
        return *slot;
    }

    bool revealed(Id id) const { return id < memo_.size() && memo_[id].has_value(); }
    std::optional<double> peek(Id id) const { return id < memo_.size() ? memo_[id] : std::nullopt; }
    std::uint64_t reveals() const { return reveals_; }
    std::size_t size() const { return memo_.size(); }

private:
    Source source_;
    std::vector<std::optional<double>> memo_;
    std::uint64_t reveals_ = 0;
};

}  // namespace imprecise
