#pragma once

// Contact sets, π-ambiguity, ply and the exhaustive ambiguity oracle.

#include <bit>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "imprecise/core.hpp"
#include "imprecise/detail/fenwick.hpp"

namespace imprecise {

/// |Γ^π_i| for every position: how many intervals at positions <= i meet the
/// interval at position i. O(n log n).
inline ContactProfile contact_profile(const RegionSet& set, const Permutation& pi) {
    pi.validate(set.size());
    std::vector<double> coords;
    coords.reserve(2 * set.size());
    for (const auto& iv : set.intervals()) {
        coords.push_back(iv.left);
        coords.push_back(iv.right);
    }
    const detail::Compressor ranks(std::move(coords));
    detail::FenwickCount lefts(ranks.size());
    detail::FenwickCount rights(ranks.size());

    ContactProfile out;
    out.sizes.reserve(set.size());
    for (Id id : pi.order) {
        const auto& iv = set[id];
        lefts.add(ranks.rank(iv.left));
        rights.add(ranks.rank(iv.right));
        // started at or before r_i, minus those already finished before l_i
        const long started = lefts.prefix(ranks.count_less_equal(iv.right));
        const long finished = rights.prefix(ranks.count_less(iv.left));
        out.sizes.push_back(static_cast<std::size_t>(started - finished));
    }
    return out;
}

inline double ambiguity_of(const ContactProfile& profile) {
    double total = 0.0;
    for (std::size_t s : profile.sizes) total += std::log2(static_cast<double>(s));
    return total;
}

/// A^π(R) in bits.
inline double pi_ambiguity(const RegionSet& set, const Permutation& pi) {
    return ambiguity_of(contact_profile(set, pi));
}

/// Ids whose contact set is only themselves.
inline std::vector<Id> bottom_set(const RegionSet& set, const Permutation& pi) {
    const auto profile = contact_profile(set, pi);
    std::vector<Id> out;
    for (std::size_t i = 0; i < pi.size(); ++i)
        if (profile.sizes[i] == 1) out.push_back(pi.order[i]);
    return out;
}

/// True iff no interval appears before an interval it strictly contains.
/// Pairwise check; meant for audits.
inline bool is_containment_compatible(const RegionSet& set, const Permutation& pi) {
    pi.validate(set.size());
    const auto& order = pi.order;
    for (std::size_t a = 0; a < order.size(); ++a)
        for (std::size_t b = a + 1; b < order.size(); ++b)
            if (strictly_contains(set[order[a]], set[order[b]])) return false;
    return true;
}

/// Maximum number of intervals sharing a point.
inline std::size_t ply(const RegionSet& set) {
    std::vector<std::pair<double, int>> events;
    events.reserve(2 * set.size());
    for (const auto& iv : set.intervals()) {
        events.emplace_back(iv.left, 0);  // opens sort first at equal coordinates
        events.emplace_back(iv.right, 1);
    }
    std::sort(events.begin(), events.end());
    std::size_t active = 0;
    std::size_t best = 0;
    for (const auto& [x, kind] : events) {
        if (kind == 0) {
            best = std::max(best, ++active);
        } else {
            --active;
        }
    }
    return best;
}

enum class PermutationClass { all, containment_compatible };

inline constexpr std::size_t kBruteForceLimit = 9;

/// A(R) = min over processing orders of A^π(R), by exhaustive enumeration of
/// orders (prefix costs are shared along the search tree). n <= 9.
inline double ambiguity_bruteforce(const RegionSet& set, PermutationClass mode) {
    const std::size_t n = set.size();
    if (n > kBruteForceLimit)
        throw InvalidInput("ambiguity_bruteforce supports n <= " + std::to_string(kBruteForceLimit) + " (got " +
                           std::to_string(n) + "); use ambiguity_approx for larger instances");

    std::vector<std::uint32_t> neighbours(n, 0);
    std::vector<std::uint32_t> inside(n, 0);  // ids strictly contained in i
    for (Id i = 0; i < n; ++i)
        for (Id j = 0; j < n; ++j) {
            if (i == j) continue;
            if (intersects(set[i], set[j])) neighbours[i] |= 1u << j;
            if (strictly_contains(set[i], set[j])) inside[i] |= 1u << j;
        }

    std::vector<double> log_table(n + 1, 0.0);
    for (std::size_t k = 1; k <= n; ++k) log_table[k] = std::log2(static_cast<double>(k));

    double best = std::numeric_limits<double>::infinity();
    const std::uint32_t full = n == 32 ? ~0u : (1u << n) - 1u;
    auto search = [&](auto&& self, std::uint32_t placed, double cost) -> void {
        if (placed == full) {
            best = std::min(best, cost);
            return;
        }
        for (Id i = 0; i < n; ++i) {
            if (placed & (1u << i)) continue;
            if (mode == PermutationClass::containment_compatible && (inside[i] & ~placed)) continue;
            const auto contact = static_cast<std::size_t>(std::popcount(neighbours[i] & placed)) + 1;
            self(self, placed | (1u << i), cost + log_table[contact]);
        }
    };
    search(search, 0u, 0.0);
    return best;
}

}  // namespace imprecise
