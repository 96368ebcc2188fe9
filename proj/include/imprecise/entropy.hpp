#pragma once

// Interval-graph entropy and the quantities it is sandwiched between:
// π-ambiguity from below/above and the number of linear extensions of the
// interval order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "imprecise/ambiguity.hpp"
#include "imprecise/core.hpp"
#include "imprecise/partitions.hpp"

namespace imprecise {

using BigInt = boost::multiprecision::cpp_int;

struct CliqueCover {
    std::vector<std::vector<Id>> cliques;  // each sorted ascending
};

/// Point in the independent-set polytope, one coordinate per id.
struct StableVector {
    std::vector<double> a;
};

/// Interval lengths as fractions of a domain of size domain_scale.
struct EmbeddingWeights {
    std::vector<double> w;
    double domain_scale = 1.0;
    // Rank embeddings only: endpoint coordinates in half units.
    std::vector<long long> left_ticks;
    std::vector<long long> right_ticks;
};

struct EntropyResult {
    double H = 0.0;            // primal value, bits per element (upper bound)
    double lower_bound = 0.0;  // H minus the final duality gap
    StableVector witness;
    std::size_t iterations = 0;
};

class EntropyNotConverged : public std::runtime_error {
public:
    EntropyNotConverged(double upper, double lower)
        : std::runtime_error("entropy oracle did not converge: H in [" + std::to_string(lower) + ", " +
                             std::to_string(upper) + "]"),
          upper_(upper),
          lower_(lower) {}
    double upper() const { return upper_; }
    double lower() const { return lower_; }

private:
    double upper_;
    double lower_;
};

/// Every maximal clique of the intersection graph, left to right. A clique is
/// reported whenever a close event directly follows an open event in the
/// endpoint sweep (opens first at equal coordinates).
inline CliqueCover maximal_cliques(const RegionSet& set) {
    struct Event {
        double x;
        int kind;  // 0 open, 1 close
        Id id;
    };
    std::vector<Event> events;
    events.reserve(2 * set.size());
    for (const auto& iv : set.intervals()) {
        events.push_back({iv.left, 0, iv.id});
        events.push_back({iv.right, 1, iv.id});
    }
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        if (a.x != b.x) return a.x < b.x;
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.id < b.id;
    });

    CliqueCover out;
    std::vector<Id> active;
    std::vector<std::size_t> slot(set.size(), 0);
    bool opened = false;
    for (const auto& e : events) {
        if (e.kind == 0) {
            slot[e.id] = active.size();
            active.push_back(e.id);
            opened = true;
            continue;
        }
        if (opened) {
            auto clique = active;
            std::sort(clique.begin(), clique.end());
            out.cliques.push_back(std::move(clique));
            opened = false;
        }
        const std::size_t at = slot[e.id];
        active[at] = active.back();
        slot[active[at]] = at;
        active.pop_back();
    }
    return out;
}

namespace detail {

/// Weighted interval scheduling with the right-endpoint order precomputed, so
/// repeated solves with changing weights cost O(n).
class IndependentSetSolver {
public:
    explicit IndependentSetSolver(const RegionSet& set) : order_(set.size()), previous_(set.size()) {
        std::iota(order_.begin(), order_.end(), Id{0});
        std::sort(order_.begin(), order_.end(), [&](Id a, Id b) {
            if (set[a].right != set[b].right) return set[a].right < set[b].right;
            return a < b;
        });
        std::vector<double> rights(order_.size());
        for (std::size_t k = 0; k < order_.size(); ++k) rights[k] = set[order_[k]].right;
        // previous_[k]: number of intervals (in order_) ending strictly left of interval k
        for (std::size_t k = 0; k < order_.size(); ++k)
            previous_[k] = static_cast<std::size_t>(
                std::lower_bound(rights.begin(), rights.end(), set[order_[k]].left) - rights.begin());
        best_.resize(order_.size() + 1);
    }

    /// Returns the chosen ids ascending; `value` receives the total weight.
    std::vector<Id> solve(const std::vector<double>& weight, double* value = nullptr) {
        const std::size_t n = order_.size();
        best_[0] = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            best_[k + 1] = std::max(best_[k], weight[order_[k]] + best_[previous_[k]]);
        std::vector<Id> chosen;
        for (std::size_t k = n; k > 0;) {
            const double take = weight[order_[k - 1]] + best_[previous_[k - 1]];
            if (take >= best_[k - 1] && weight[order_[k - 1]] > 0.0) {
                chosen.push_back(order_[k - 1]);
                k = previous_[k - 1];
            } else {
                --k;
            }
        }
        std::sort(chosen.begin(), chosen.end());
        if (value) *value = best_[n];
        return chosen;
    }

private:
    std::vector<Id> order_;
    std::vector<std::size_t> previous_;
    std::vector<double> best_;
};

/// Optimal colouring of the interval graph: colour classes are independent
/// sets and there are exactly ply(set) of them.
inline std::vector<std::vector<Id>> colour_classes(const RegionSet& set) {
    const auto order = containers_first(set);
    using Busy = std::pair<double, std::size_t>;  // (right endpoint, colour)
    std::priority_queue<Busy, std::vector<Busy>, std::greater<>> busy;
    std::vector<std::size_t> free_colours;
    std::vector<std::vector<Id>> classes;
    for (Id id : order) {
        const auto& iv = set[id];
        while (!busy.empty() && busy.top().first < iv.left) {
            free_colours.push_back(busy.top().second);
            busy.pop();
        }
        std::size_t c;
        if (free_colours.empty()) {
            c = classes.size();
            classes.emplace_back();
        } else {
            c = free_colours.back();
            free_colours.pop_back();
        }
        classes[c].push_back(id);
        busy.push({iv.right, c});
    }
    for (auto& cls : classes) std::sort(cls.begin(), cls.end());
    return classes;
}

}  // namespace detail

/// Maximum-weight set of pairwise disjoint intervals (ids ascending).
/// Zero-weight intervals are never chosen.
inline std::vector<Id> max_weight_independent_set(const RegionSet& set, const std::vector<double>& weights) {
    if (weights.size() != set.size()) throw InvalidInput("one weight per interval required");
    for (double w : weights)
        if (!(w >= 0.0)) throw InvalidInput("weights must be non-negative");
    detail::IndependentSetSolver solver(set);
    return solver.solve(weights);
}

inline constexpr std::size_t kEntropyIterationCap = 1'000'000;

/// H(R): minimum of (1/n) Σ -log2 a_i over the independent-set polytope of the
/// intersection graph. Away-step Frank-Wolfe; stops once the duality gap per
/// element drops below tol bits.
inline EntropyResult entropy_oracle(const RegionSet& set, double tol = 1e-5,
                                    std::size_t max_iterations = kEntropyIterationCap) {
    if (!(tol > 0.0)) throw InvalidInput("entropy tolerance must be positive");
    const std::size_t n = set.size();
    const double nats_to_bits = 1.0 / (static_cast<double>(n) * std::numbers::ln2);
    if (n == 1) return {0.0, 0.0, {{1.0}}, 0};

    struct Vertex {
        std::vector<Id> members;
        double weight;
    };
    std::vector<Vertex> active;
    std::map<std::vector<Id>, std::size_t> index_of;

    std::vector<double> a(n, 0.0);
    {
        auto classes = detail::colour_classes(set);
        const double share = 1.0 / static_cast<double>(classes.size());
        for (auto& cls : classes) {
            for (Id id : cls) a[id] += share;
            index_of.emplace(cls, active.size());
            active.push_back({std::move(cls), share});
        }
    }

    auto objective = [&]() {
        double f = 0.0;
        for (double v : a) f -= std::log(v);
        return f;
    };

    detail::IndependentSetSolver solver(set);
    std::vector<double> inverse(n);
    std::vector<double> direction(n);

    // argmin over [0, cap] of -Σ log(a + γ d): the derivative is increasing, so
    // bisect on its sign with Newton steps when they stay inside the bracket.
    auto line_search = [&](double cap) {
        auto slope = [&](double g, double* curvature) {
            double s = 0.0;
            double c = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (direction[i] == 0.0) continue;
                const double v = a[i] + g * direction[i];
                const double q = direction[i] / v;
                s -= q;
                c += q * q;
            }
            if (curvature) *curvature = c;
            return s;
        };
        auto feasible = [&](double g) {
            for (std::size_t i = 0; i < n; ++i)
                if (a[i] + g * direction[i] <= 0.0) return false;
            return true;
        };
        if (feasible(cap) && slope(cap, nullptr) <= 0.0) return cap;
        double lo = 0.0;
        double hi = cap;
        double g = 0.0;
        for (int it = 0; it < 200 && hi - lo > 1e-17 * std::max(1.0, cap); ++it) {
            double curvature = 0.0;
            const double s = slope(g, &curvature);
            if (s == 0.0) return g;
            if (s < 0.0) lo = g; else hi = g;
            double next = curvature > 0.0 ? g - s / curvature : 0.5 * (lo + hi);
            if (!(next > lo && next < hi) || !feasible(next)) next = 0.5 * (lo + hi);
            g = next;
        }
        return lo;
    };

    double f = objective();
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        for (std::size_t i = 0; i < n; ++i) inverse[i] = 1.0 / a[i];
        double toward_value = 0.0;
        auto toward = solver.solve(inverse, &toward_value);
        const double gap = toward_value - static_cast<double>(n);  // nats, >= 0 up to rounding
        if (gap * nats_to_bits < tol)
            return {f * nats_to_bits, (f - std::max(gap, 0.0)) * nats_to_bits, {a}, iter};

        std::size_t away = 0;
        double away_value = std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < active.size(); ++v) {
            double s = 0.0;
            for (Id id : active[v].members) s += inverse[id];
            if (s < away_value) {
                away_value = s;
                away = v;
            }
        }
        const double away_gap = static_cast<double>(n) - away_value;

        if (gap >= away_gap || active.size() == 1) {
            std::fill(direction.begin(), direction.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) direction[i] = -a[i];
            for (Id id : toward) direction[id] += 1.0;
            const double step = line_search(1.0);
            if (step >= 1.0) {
                active.clear();
                index_of.clear();
                std::fill(a.begin(), a.end(), 0.0);
                for (Id id : toward) a[id] = 1.0;
                index_of.emplace(toward, 0);
                active.push_back({std::move(toward), 1.0});
            } else {
                for (std::size_t i = 0; i < n; ++i) a[i] += step * direction[i];
                for (auto& v : active) v.weight *= 1.0 - step;
                auto [it, fresh] = index_of.emplace(toward, active.size());
                if (fresh) {
                    active.push_back({std::move(toward), step});
                } else {
                    active[it->second].weight += step;
                }
            }
        } else {
            const double lambda = active[away].weight;
            const double cap = lambda / (1.0 - lambda);
            for (std::size_t i = 0; i < n; ++i) direction[i] = a[i];
            for (Id id : active[away].members) direction[id] -= 1.0;
            const double step = line_search(cap);
            for (std::size_t i = 0; i < n; ++i) a[i] += step * direction[i];
            for (auto& v : active) v.weight *= 1.0 + step;
            active[away].weight -= step;
            if (step >= cap || active[away].weight <= 1e-15) {
                // drop step: remove the away vertex, then rebuild a from the
                // remaining weights to keep both representations in sync
                index_of.erase(active[away].members);
                if (away != active.size() - 1) {
                    active[away] = std::move(active.back());
                    index_of[active[away].members] = away;
                }
                active.pop_back();
                double total = 0.0;
                for (const auto& v : active) total += v.weight;
                std::fill(a.begin(), a.end(), 0.0);
                for (auto& v : active) {
                    v.weight /= total;
                    for (Id id : v.members) a[id] += v.weight;
                }
            }
        }
        f = objective();
    }
    for (std::size_t i = 0; i < n; ++i) inverse[i] = 1.0 / a[i];
    double toward_value = 0.0;
    solver.solve(inverse, &toward_value);
    throw EntropyNotConverged(f * nats_to_bits, (f - (toward_value - static_cast<double>(n))) * nats_to_bits);
}

/// (1/n) Σ log2(n · w_i): the entropy value an embedding certifies.
inline double embedding_entropy_value(const RegionSet& set, const EmbeddingWeights& weights) {
    const std::size_t n = set.size();
    if (weights.w.size() != n) throw InvalidInput("one weight per interval required");
    double total = 0.0;
    for (double w : weights.w) {
        if (!(w > 0.0)) throw InvalidInput("embedding weights must be positive");
        total += std::log2(static_cast<double>(n) * w);
    }
    return total / static_cast<double>(n);
}

/// Re-embeds R on (0, n) by endpoint rank: the k-th endpoint goes to k/2 and
/// every right endpoint moves a further 1/2. At equal coordinates left
/// endpoints come first; lefts by right endpoint descending, rights by left
/// endpoint descending, then by position in pi.
inline EmbeddingWeights canonical_rank_embedding(const RegionSet& set, const Permutation& pi) {
    if (!is_containment_compatible(set, pi))
        throw InvalidInput("canonical_rank_embedding needs a containment-compatible permutation");
    const std::size_t n = set.size();
    const auto pos = pi.positions();
    struct Endpoint {
        double x;
        int kind;       // 0 left, 1 right
        double other;   // the opposite endpoint
        std::size_t at; // position in pi
        Id id;
    };
    std::vector<Endpoint> ends;
    ends.reserve(2 * n);
    for (const auto& iv : set.intervals()) {
        ends.push_back({iv.left, 0, iv.right, pos[iv.id], iv.id});
        ends.push_back({iv.right, 1, iv.left, pos[iv.id], iv.id});
    }
    std::sort(ends.begin(), ends.end(), [](const Endpoint& p, const Endpoint& q) {
        if (p.x != q.x) return p.x < q.x;
        if (p.kind != q.kind) return p.kind < q.kind;
        if (p.other != q.other) return p.other > q.other;
        return p.at < q.at;
    });

    EmbeddingWeights out;
    out.domain_scale = static_cast<double>(n);
    out.left_ticks.assign(n, 0);
    out.right_ticks.assign(n, 0);
    for (std::size_t k = 0; k < ends.size(); ++k) {
        if (ends[k].kind == 0) {
            out.left_ticks[ends[k].id] = static_cast<long long>(k);
        } else {
            out.right_ticks[ends[k].id] = static_cast<long long>(k) + 1;
        }
    }
    out.w.resize(n);
    for (Id id = 0; id < n; ++id) {
        const double length = 0.5 * static_cast<double>(out.right_ticks[id] - out.left_ticks[id]);
        out.w[id] = length / static_cast<double>(n);
    }
    return out;
}

inline constexpr std::size_t kExtensionLimit = 20;

/// e(R): linear orders of the ids in which i precedes j whenever r_i < l_j.
/// Subset DP over down-sets, n <= 20.
inline BigInt count_linear_extensions(const RegionSet& set) {
    const std::size_t n = set.size();
    if (n > kExtensionLimit)
        throw InvalidInput("count_linear_extensions supports n <= " + std::to_string(kExtensionLimit) + " (got " +
                           std::to_string(n) + ")");
    std::vector<std::uint32_t> below(n, 0);
    for (Id i = 0; i < n; ++i)
        for (Id j = 0; j < n; ++j)
            if (set[j].right < set[i].left) below[i] |= 1u << j;
    // 20! < 2^64, so the table fits in machine words
    std::vector<std::uint64_t> ways(std::size_t{1} << n, 0);
    ways[0] = 1;
    for (std::uint32_t placed = 0; placed < ways.size(); ++placed) {
        if (ways[placed] == 0) continue;
        for (Id j = 0; j < n; ++j) {
            const std::uint32_t bit = 1u << j;
            if ((placed & bit) || (below[j] & ~placed)) continue;
            ways[placed | bit] += ways[placed];
        }
    }
    return BigInt(ways.back());
}

inline double log2_big(const BigInt& v) {
    if (v <= 0) throw InvalidInput("log2 of a non-positive count");
    const auto bits = boost::multiprecision::msb(v);
    if (bits < 1000) return std::log2(v.convert_to<double>());
    const BigInt top = v >> (bits - 60);
    return std::log2(top.convert_to<double>()) + static_cast<double>(bits - 60);
}

/// H(R, λ) = H(R) + log2(λ / n).
inline double relative_entropy(const RegionSet& set, double lambda, double tol = 1e-5) {
    if (!(lambda > 0.0)) throw InvalidInput("lambda must be positive");
    const double h = entropy_oracle(set, tol).H;
    return h + std::log2(lambda / static_cast<double>(set.size()));
}

struct ApproximationReport {
    double A_level = 0.0;
    double nH = 0.0;
    std::optional<double> log2_e;
    double ratio_A_over_nH = 0.0;  // 0 when nH = 0
    double ratio_nH_over_A = 0.0;  // 0 when A = 0
    bool lemma2_pass = false;      // A ≤ 2 nH
    bool lemma4_pass = false;      // nH ≤ 3 A
    std::optional<bool> sandwich_pass;  // log2 e ≤ nH ≤ 2 log2 e
};

/// Evaluates the level-permutation ambiguity against the entropy oracle and,
/// for n <= 20, the extension count. `slack` is the additive tolerance of
/// every inequality check.
inline ApproximationReport approximation_report(const RegionSet& set, double tol = 1e-7, double slack = 1e-6) {
    ApproximationReport out;
    const double n = static_cast<double>(set.size());
    out.A_level = ambiguity_approx(set);
    out.nH = n * entropy_oracle(set, tol).H;
    if (out.nH > 0.0) out.ratio_A_over_nH = out.A_level / out.nH;
    if (out.A_level > 0.0) out.ratio_nH_over_A = out.nH / out.A_level;
    out.lemma2_pass = out.A_level <= 2.0 * out.nH + slack;
    out.lemma4_pass = out.nH <= 3.0 * out.A_level + slack;
    if (set.size() <= kExtensionLimit) {
        out.log2_e = log2_big(count_linear_extensions(set));
        out.sandwich_pass = *out.log2_e <= out.nH + slack && out.nH <= 2.0 * *out.log2_e + slack;
    }
    return out;
}

}  // namespace imprecise
