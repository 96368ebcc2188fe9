#pragma once

// Shared helpers for the test suites: random instances with plenty of ties
// and containments, and slow reference computations.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <numeric>
#include <utility>
#include <vector>

#include "imprecise/imprecise.hpp"

namespace testing_support {

using namespace imprecise;

enum class Shape { grid, continuous, nested, mixed };

// grid: half-integer endpoints on a small range, so touching, equal and
// nested intervals are common.
inline RegionSet random_instance(Rng& rng, std::size_t n, Shape shape) {
    std::vector<std::pair<double, double>> spans;
    if (shape == Shape::mixed) shape = static_cast<Shape>(rng.below(3));
    for (std::size_t i = 0; i < n; ++i) {
        double l = 0, r = 0;
        switch (shape) {
            case Shape::grid: {
                l = std::floor(rng.uniform(0, static_cast<double>(n))) / 2;
                r = l + std::floor(rng.uniform(0, 6)) / 2;
                break;
            }
            case Shape::continuous: {
                l = rng.uniform(0, static_cast<double>(n));
                r = l + rng.uniform(0, 3);
                break;
            }
            case Shape::nested: {
                const double c = std::floor(rng.uniform(0, 4)) * 10;
                const double w = std::floor(rng.uniform(0, 8)) + 0.5 * static_cast<double>(rng.below(2));
                l = c - w;
                r = c + w + (rng.below(3) == 0 ? 1 : 0);
                break;
            }
            case Shape::mixed: break;
        }
        spans.emplace_back(l, r);
    }
    return RegionSet::from_spans(std::span<const std::pair<double, double>>(spans));
}

// Points inside each interval: uniform, left end, right end, all equal where
// possible, or on the half-integer grid.
inline std::vector<double> random_points(Rng& rng, const RegionSet& set, unsigned mode) {
    std::vector<double> xs(set.size());
    double common = set.bbox().lo + 0.5 * (set.bbox().hi - set.bbox().lo);
    for (const auto& iv : set.intervals()) {
        double x = 0;
        switch (mode % 5) {
            case 0: x = rng.uniform(iv.left, iv.right); break;
            case 1: x = iv.left; break;
            case 2: x = iv.right; break;
            case 3: x = common; break;
            default: x = std::floor(2 * rng.uniform(iv.left, iv.right)) / 2; break;
        }
        xs[iv.id] = std::clamp(x, iv.left, iv.right);
    }
    return xs;
}

inline Permutation random_order(Rng& rng, std::size_t n) {
    Permutation p = Permutation::identity(n);
    for (std::size_t i = n; i > 1; --i) std::swap(p.order[i - 1], p.order[rng.below(i)]);
    return p;
}

inline std::vector<std::size_t> contact_sizes_pairwise(const RegionSet& set, const Permutation& pi) {
    std::vector<std::size_t> sizes(pi.size(), 0);
    for (std::size_t i = 0; i < pi.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            const auto& a = set[pi.order[i]];
            const auto& b = set[pi.order[j]];
            if (a.left <= b.right && b.left <= a.right) ++sizes[i];
        }
    return sizes;
}

inline bool strictly_inside(const Interval& outer, const Interval& inner) {
    return outer.left <= inner.left && inner.right <= outer.right &&
           (outer.left != inner.left || outer.right != inner.right);
}

// Longest chains in the strict-containment DAG, memoized recursion.
inline std::vector<std::size_t> chain_lengths(const RegionSet& set, bool upward) {
    const std::size_t n = set.size();
    std::vector<std::size_t> memo(n, 0);
    std::function<std::size_t(Id)> go = [&](Id i) -> std::size_t {
        if (memo[i]) return memo[i];
        std::size_t best = 0;
        for (Id j = 0; j < n; ++j) {
            const bool edge = upward ? strictly_inside(set[j], set[i]) : strictly_inside(set[i], set[j]);
            if (edge) best = std::max(best, go(j));
        }
        return memo[i] = best + 1;
    };
    for (Id i = 0; i < n; ++i) go(i);
    return memo;
}

using Levels = std::vector<std::vector<Id>>;

// depth: chain of containers above (1 = contained in nothing); D_1 is the deepest
inline Levels brute_depth(const RegionSet& set) {
    const auto up = chain_lengths(set, true);
    const std::size_t m = *std::max_element(up.begin(), up.end());
    Levels out(m);
    for (Id i = 0; i < set.size(); ++i) out[m - up[i]].push_back(i);
    return out;
}

inline Levels brute_height(const RegionSet& set) {
    const auto down = chain_lengths(set, false);
    Levels out(*std::max_element(down.begin(), down.end()));
    for (Id i = 0; i < set.size(); ++i) out[down[i] - 1].push_back(i);
    return out;
}

// Ordering, prefix and predecessor checks the sorting pipeline relies on.
// Empty string when all hold.
inline std::string level_order_violation(const RegionSet& set) {
    const Permutation pi = level_permutation(set);
    try {
        pi.validate(set.size());
    } catch (const InvalidInput& e) {
        return e.what();
    }
    if (!is_containment_compatible(set, pi)) return "not containment compatible";

    auto leaves = containment_leaves(set);
    std::sort(leaves.begin(), leaves.end(), [&](Id a, Id b) {
        const auto &x = set[a], &y = set[b];
        if (x.right != y.right) return x.right > y.right;
        if (x.left != y.left) return x.left > y.left;
        return a < b;
    });
    if (!std::equal(leaves.begin(), leaves.end(), pi.order.begin())) return "leaves are not a right-to-left prefix";

    const auto sizes = contact_profile(set, pi).sizes;
    for (std::size_t k = 1; k < leaves.size(); ++k) {
        if (sizes[k] == 1) continue;
        if (!set[pi.order[k - 1]].contains_point(set[pi.order[k]].right))
            return "predecessor misses the right end at position " + std::to_string(k);
    }
    return "";
}

// Ids sorted by (x, id).
inline std::vector<Id> true_order(const std::vector<double>& xs) {
    std::vector<Id> ids(xs.size());
    std::iota(ids.begin(), ids.end(), Id{0});
    std::sort(ids.begin(), ids.end(), [&](Id a, Id b) { return xs[a] != xs[b] ? xs[a] < xs[b] : a < b; });
    return ids;
}

// Containment-compatible shuffle: repeatedly take, in random key order, the
// first interval whose strict containees are all placed.
inline Permutation random_compatible(Rng& rng, const RegionSet& set) {
    const std::size_t n = set.size();
    std::vector<double> key(n);
    for (auto& k : key) k = rng.unit();
    std::vector<Id> ids(n);
    std::iota(ids.begin(), ids.end(), Id{0});
    std::sort(ids.begin(), ids.end(), [&](Id a, Id b) { return key[a] < key[b]; });
    std::vector<Id> out;
    std::vector<bool> placed(n, false);
    while (out.size() < n) {
        for (Id id : ids) {
            if (placed[id]) continue;
            bool ready = true;
            for (Id other = 0; other < n && ready; ++other)
                if (!placed[other] && other != id && strictly_inside(set[id], set[other])) ready = false;
            if (ready) {
                placed[id] = true;
                out.push_back(id);
                break;
            }
        }
    }
    return Permutation{out};
}

}  // namespace testing_support
