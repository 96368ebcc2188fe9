#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "support.hpp"

using namespace imprecise;
using namespace testing_support;

namespace {

using Cliques = std::vector<std::vector<Id>>;

const RegionSet four_under_one = RegionSet::from_spans({{0, 10}, {1, 2}, {3, 4}, {5, 6}, {7, 8}});

RegionSet disjoint(std::size_t n) {
    std::vector<std::pair<double, double>> spans;
    for (std::size_t i = 0; i < n; ++i) spans.emplace_back(2.0 * i, 2.0 * i + 1);
    return RegionSet::from_spans(std::span<const std::pair<double, double>>(spans));
}

RegionSet copies(std::size_t k) {
    std::vector<std::pair<double, double>> spans(k, {0.0, 1.0});
    return RegionSet::from_spans(std::span<const std::pair<double, double>>(spans));
}

// log2 5 - 8/5: minimizer of -log t - 4 log(1 - t) at t = 1/5
const double kStarEntropy = std::log2(5.0) - 1.6;

bool independent(const RegionSet& set, std::uint32_t mask) {
    for (Id i = 0; i < set.size(); ++i)
        for (Id j = i + 1; j < set.size(); ++j)
            if ((mask >> i & 1) && (mask >> j & 1) && intersects(set[i], set[j])) return false;
    return true;
}

double best_independent_weight(const RegionSet& set, const std::vector<double>& w) {
    double best = 0;
    for (std::uint32_t mask = 0; mask < (1u << set.size()); ++mask) {
        if (!independent(set, mask)) continue;
        double s = 0;
        for (Id i = 0; i < set.size(); ++i)
            if (mask >> i & 1) s += w[i];
        best = std::max(best, s);
    }
    return best;
}

// maximal sets of intervals sharing a point, probed at every endpoint
Cliques brute_cliques(const RegionSet& set) {
    std::set<std::vector<Id>> all;
    for (const auto& probe : set.intervals())
        for (double x : {probe.left, probe.right}) {
            std::vector<Id> c;
            for (const auto& iv : set.intervals())
                if (iv.contains_point(x)) c.push_back(iv.id);
            all.insert(c);
        }
    Cliques out;
    for (const auto& c : all) {
        bool maximal = true;
        for (const auto& d : all)
            if (d.size() > c.size() && std::includes(d.begin(), d.end(), c.begin(), c.end())) maximal = false;
        if (maximal) out.push_back(c);
    }
    return out;
}

EmbeddingWeights lengths(std::vector<double> w) {
    EmbeddingWeights e;
    e.w = std::move(w);
    return e;
}

std::uint64_t extensions_by_enumeration(const RegionSet& set) {
    Permutation p = Permutation::identity(set.size());
    std::uint64_t count = 0;
    do {
        bool ok = true;
        for (std::size_t a = 0; a < p.size() && ok; ++a)
            for (std::size_t b = a + 1; b < p.size() && ok; ++b)
                if (set[p.order[b]].right < set[p.order[a]].left) ok = false;
        count += ok;
    } while (std::next_permutation(p.order.begin(), p.order.end()));
    return count;
}

}  // namespace

TEST(MaximalCliques, Examples) {
    EXPECT_EQ(maximal_cliques(four_under_one).cliques, (Cliques{{0, 1}, {0, 2}, {0, 3}, {0, 4}}));
    EXPECT_EQ(maximal_cliques(copies(5)).cliques, (Cliques{{0, 1, 2, 3, 4}}));
    EXPECT_EQ(maximal_cliques(disjoint(3)).cliques, (Cliques{{0}, {1}, {2}}));
}

TEST(MaximalCliques, MatchPointProbes) {
    Rng rng(1);
    for (int t = 0; t < 300; ++t) {
        const auto set = random_instance(rng, 1 + rng.below(60), Shape::mixed);
        auto got = maximal_cliques(set).cliques;
        std::sort(got.begin(), got.end());
        ASSERT_EQ(got, brute_cliques(set)) << "trial " << t;
    }
}

TEST(IndependentSet, Examples) {
    EXPECT_EQ(max_weight_independent_set(four_under_one, {1, 1, 1, 1, 1}), (std::vector<Id>{1, 2, 3, 4}));
    EXPECT_EQ(max_weight_independent_set(copies(4), {1, 1, 1, 1}).size(), 1u);
    EXPECT_EQ(max_weight_independent_set(disjoint(4), {1, 1, 1, 1}), (std::vector<Id>{0, 1, 2, 3}));
    EXPECT_EQ(max_weight_independent_set(disjoint(3), {1, 0, 2}), (std::vector<Id>{0, 2}));
    EXPECT_EQ(max_weight_independent_set(four_under_one, {5, 1, 1, 1, 1}), (std::vector<Id>{0}));
}

TEST(IndependentSet, MatchesSubsetSearch) {
    Rng rng(2);
    for (int t = 0; t < 300; ++t) {
        const auto set = random_instance(rng, 1 + rng.below(12), Shape::mixed);
        std::vector<double> w(set.size());
        for (auto& x : w) x = rng.below(4) == 0 ? 0.0 : rng.uniform(0, 3);
        const auto chosen = max_weight_independent_set(set, w);
        std::uint32_t mask = 0;
        double total = 0;
        for (Id id : chosen) {
            mask |= 1u << id;
            total += w[id];
            EXPECT_GT(w[id], 0.0);
        }
        ASSERT_TRUE(independent(set, mask));
        ASSERT_NEAR(total, best_independent_weight(set, w), 1e-9);
    }
}

TEST(ColourClasses, UsesPlyManyIndependentClasses) {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const auto set = random_instance(rng, 1 + rng.below(80), Shape::mixed);
        const auto classes = detail::colour_classes(set);
        ASSERT_EQ(classes.size(), ply(set));
        std::vector<int> seen(set.size(), 0);
        for (const auto& cls : classes)
            for (std::size_t a = 0; a < cls.size(); ++a) {
                ++seen[cls[a]];
                for (std::size_t b = a + 1; b < cls.size(); ++b) ASSERT_FALSE(intersects(set[cls[a]], set[cls[b]]));
            }
        for (int s : seen) ASSERT_EQ(s, 1);
    }
}

TEST(EntropyOracle, Examples) {
    EXPECT_NEAR(entropy_oracle(disjoint(7)).H, 0.0, 1e-9);
    for (std::size_t k : {2u, 3u, 4u, 16u, 256u}) EXPECT_NEAR(entropy_oracle(copies(k)).H, std::log2(double(k)), 1e-6);
    const auto star = entropy_oracle(four_under_one, 1e-9);
    EXPECT_NEAR(star.H, kStarEntropy, 1e-6);
    EXPECT_NEAR(star.witness.a[0], 0.2, 1e-3);
    for (Id i = 1; i < 5; ++i) EXPECT_NEAR(star.witness.a[i], 0.8, 1e-3);
    EXPECT_EQ(entropy_oracle(RegionSet::from_spans({{0, 1}})).H, 0.0);
    EXPECT_THROW(entropy_oracle(four_under_one, 0.0), InvalidInput);
}

// The witness satisfies every clique constraint (this describes the polytope
// for interval graphs), and no independent set improves along 1/a.
TEST(EntropyOracle, WitnessIsFeasibleAndOptimal) {
    Rng rng(4);
    for (int t = 0; t < 150; ++t) {
        const auto set = random_instance(rng, 2 + rng.below(11), Shape::mixed);
        const double tol = 1e-6;
        const auto r = entropy_oracle(set, tol);
        const std::size_t n = set.size();
        for (const auto& clique : brute_cliques(set)) {
            double s = 0;
            for (Id id : clique) s += r.witness.a[id];
            ASSERT_LE(s, 1 + 1e-9);
        }
        double value = 0;
        std::vector<double> inverse(n);
        for (Id i = 0; i < n; ++i) {
            ASSERT_GT(r.witness.a[i], 0.0);
            value -= std::log2(r.witness.a[i]);
            inverse[i] = 1 / r.witness.a[i];
        }
        ASSERT_NEAR(value / n, r.H, 1e-9);
        ASSERT_LE(r.lower_bound, r.H + 1e-12);
        ASSERT_GE(r.lower_bound, r.H - tol - 1e-12);
        // gap of the linearization is max_b Σ b_i/a_i - n, in nats
        const double gap_bits = (best_independent_weight(set, inverse) - n) / (n * std::log(2.0));
        ASSERT_LE(gap_bits, tol * 1.01 + 1e-12) << "trial " << t;
    }
}

TEST(EntropyOracle, ReportsNonConvergence) {
    const auto set = generate({"random_uniform", 64, 3, {}});
    try {
        entropy_oracle(set, 1e-12, 2);
        FAIL() << "expected EntropyNotConverged";
    } catch (const EntropyNotConverged& e) {
        EXPECT_LE(e.lower(), e.upper());
        const double h = entropy_oracle(set, 1e-8).H;
        EXPECT_LE(e.lower(), h + 1e-8);
        EXPECT_GE(e.upper(), h - 1e-8);
    }
}

TEST(EmbeddingValue, Examples) {
    EXPECT_NEAR(embedding_entropy_value(four_under_one, lengths({1, 0.25, 0.25, 0.25, 0.25})), kStarEntropy, 1e-12);
    // the half-width embedding: (1/5)(log2(5/2) + 4 log2(5/8))
    EXPECT_NEAR(embedding_entropy_value(four_under_one, lengths({0.5, 0.125, 0.125, 0.125, 0.125})), -0.278072, 1e-6);
    EXPECT_NEAR(embedding_entropy_value(disjoint(6), lengths(std::vector<double>(6, 1.0 / 6))), 0.0, 1e-12);
    EXPECT_THROW(embedding_entropy_value(disjoint(2), lengths({0.5, 0.0})), InvalidInput);
    EXPECT_THROW(embedding_entropy_value(disjoint(2), lengths({0.5})), InvalidInput);
}

TEST(RankEmbedding, Examples) {
    const auto two = copies(2);
    const auto e = canonical_rank_embedding(two, Permutation{{0, 1}});
    EXPECT_EQ(e.left_ticks, (std::vector<long long>{0, 1}));
    EXPECT_EQ(e.right_ticks, (std::vector<long long>{3, 4}));
    EXPECT_EQ(e.w, (std::vector<double>{0.75, 0.75}));
    EXPECT_EQ(e.domain_scale, 2.0);

    const auto d = canonical_rank_embedding(disjoint(4), Permutation::identity(4));
    for (Id i = 0; i < 4; ++i) {
        EXPECT_EQ(d.right_ticks[i] - d.left_ticks[i], 2);
        EXPECT_EQ(d.w[i], 0.25);
    }
    EXPECT_EQ(canonical_rank_embedding(RegionSet::from_spans({{2, 3}}), Permutation::identity(1)).w,
              (std::vector<double>{1.0}));
    EXPECT_THROW(canonical_rank_embedding(four_under_one, Permutation::identity(5)), InvalidInput);
}

// Every interval gets at least (|contact set| + 1)/2 units; in half units
// that is right - left >= size + 1, checked on the integer ticks.
TEST(RankEmbedding, LengthCoversContactSet) {
    Rng rng(5);
    for (int t = 0; t < 300; ++t) {
        const auto set = random_instance(rng, 1 + rng.below(100), Shape::mixed);
        for (const Permutation& pi : {level_permutation(set), random_compatible(rng, set)}) {
            const auto e = canonical_rank_embedding(set, pi);
            const auto sizes = contact_profile(set, pi).sizes;
            long long total = 0;
            for (std::size_t k = 0; k < pi.size(); ++k) {
                const Id id = pi.order[k];
                ASSERT_GE(e.right_ticks[id] - e.left_ticks[id], static_cast<long long>(sizes[k]) + 1);
                ASSERT_GE(e.left_ticks[id], 0);
                ASSERT_LE(e.right_ticks[id], static_cast<long long>(2 * set.size()));
                total += e.right_ticks[id];
            }
            // the rank embedding keeps the intersection pattern
            for (Id a = 0; a < set.size(); ++a)
                for (Id b = a + 1; b < set.size(); ++b) {
                    const bool meet = e.left_ticks[a] < e.right_ticks[b] && e.left_ticks[b] < e.right_ticks[a];
                    ASSERT_EQ(meet, intersects(set[a], set[b]));
                }
            ASSERT_GT(total, 0);
        }
    }
}

TEST(LinearExtensions, Examples) {
    EXPECT_EQ(count_linear_extensions(disjoint(6)), 1);
    EXPECT_EQ(count_linear_extensions(RegionSet::from_spans({{0, 2}, {1, 3}})), 2);
    EXPECT_EQ(count_linear_extensions(four_under_one), 5);
    EXPECT_EQ(count_linear_extensions(copies(20)), BigInt("2432902008176640000"));
    EXPECT_THROW(count_linear_extensions(copies(21)), InvalidInput);
}

TEST(LinearExtensions, MatchEnumeration) {
    Rng rng(6);
    for (int t = 0; t < 150; ++t) {
        const auto set = random_instance(rng, 1 + rng.below(8), Shape::mixed);
        ASSERT_EQ(count_linear_extensions(set), extensions_by_enumeration(set)) << "trial " << t;
    }
}

TEST(LinearExtensions, LogOfLargeCounts) {
    EXPECT_NEAR(log2_big(BigInt(1) << 1500), 1500.0, 1e-9);
    EXPECT_NEAR(log2_big(BigInt(24)), std::log2(24.0), 1e-12);
    EXPECT_THROW(log2_big(BigInt(0)), InvalidInput);
}

TEST(RelativeEntropy, Examples) {
    EXPECT_NEAR(relative_entropy(four_under_one, 5), entropy_oracle(four_under_one).H, 1e-12);
    EXPECT_NEAR(relative_entropy(disjoint(8), 4), -1.0, 1e-9);
    EXPECT_NEAR(relative_entropy(copies(4), 8), 3.0, 1e-6);
    EXPECT_THROW(relative_entropy(copies(4), 0), InvalidInput);
}

TEST(ApproximationReport, Examples) {
    const auto d = approximation_report(disjoint(5));
    EXPECT_EQ(d.A_level, 0.0);
    EXPECT_NEAR(d.nH, 0.0, 1e-9);
    EXPECT_NEAR(*d.log2_e, 0.0, 1e-12);
    EXPECT_TRUE(d.lemma2_pass && d.lemma4_pass && *d.sandwich_pass);

    const auto c = approximation_report(copies(4));
    EXPECT_NEAR(c.A_level, std::log2(24.0), 1e-9);
    EXPECT_NEAR(c.nH, 8.0, 1e-6);
    EXPECT_NEAR(*c.log2_e, std::log2(24.0), 1e-9);
    EXPECT_TRUE(c.lemma2_pass && c.lemma4_pass && *c.sandwich_pass);

    const auto s = approximation_report(four_under_one);
    EXPECT_NEAR(s.A_level, std::log2(5.0), 1e-9);
    EXPECT_NEAR(s.nH, 5 * kStarEntropy, 1e-5);
    EXPECT_NEAR(*s.log2_e, std::log2(5.0), 1e-9);
    EXPECT_TRUE(s.lemma2_pass && s.lemma4_pass && *s.sandwich_pass);

    EXPECT_FALSE(approximation_report(generate({"random_uniform", 24, 1, {}}), 1e-5).log2_e.has_value());
}

TEST(ApproximationReport, BoundsHoldOnRandomInstances) {
    Rng rng(7);
    for (int t = 0; t < 100; ++t) {
        const auto set = random_instance(rng, 2 + rng.below(9), Shape::mixed);
        const auto r = approximation_report(set);
        ASSERT_TRUE(r.lemma2_pass) << "trial " << t;
        ASSERT_TRUE(r.lemma4_pass) << "trial " << t;
        ASSERT_TRUE(*r.sandwich_pass) << "trial " << t;
    }
}
