#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "support.hpp"

using namespace imprecise;
using namespace testing_support;

namespace {

const BoundingBox unit_box{0, 1};

RegionSet on_unit(std::initializer_list<std::pair<double, double>> spans) {
    std::vector<Interval> ivs;
    for (const auto& [l, r] : spans) ivs.push_back({ivs.size(), l, r});
    return RegionSet(std::move(ivs), unit_box);
}

std::vector<DyadicCell> row(unsigned depth, std::uint64_t first, std::uint64_t last) {
    std::vector<DyadicCell> out;
    for (std::uint64_t k = first; k <= last; ++k) out.push_back({depth, k});
    return out;
}

double log2_factorial(std::size_t k) {
    double s = 0;
    for (std::size_t i = 2; i <= k; ++i) s += std::log2(static_cast<double>(i));
    return s;
}

std::vector<Id> all_ids(std::size_t n) {
    std::vector<Id> ids(n);
    std::iota(ids.begin(), ids.end(), Id{0});
    return ids;
}

}  // namespace

// Shared with the acceptance suite.
constexpr double kWorkConstant = 16.0;
// Leaves overlapping R_i when it is processed: at most c|Γ| + c'.
constexpr std::size_t kOverlapFactor = 6;
constexpr std::size_t kOverlapSlack = 12;

TEST(DyadicCell, Arithmetic) {
    const DyadicCell c{3, 5};  // [5/8, 6/8)
    EXPECT_EQ(c.start(), 0.625);
    EXPECT_EQ(c.end(), 0.75);
    EXPECT_EQ(c.size(), 0.125);
    EXPECT_EQ(c.parent(), (DyadicCell{2, 2}));
    EXPECT_EQ(c.child(1), (DyadicCell{4, 11}));
    EXPECT_EQ((DyadicCell{1, 1}).side_of(c), 0u);
    EXPECT_TRUE((DyadicCell{0, 0}).contains(c));
    EXPECT_FALSE((DyadicCell{2, 3}).contains(c));
    EXPECT_EQ(common_ancestor({3, 5}, {3, 4}), (DyadicCell{2, 2}));
    EXPECT_EQ(common_ancestor({3, 5}, {1, 0}), (DyadicCell{0, 0}));
    EXPECT_EQ(common_ancestor({3, 5}, {5, 21}), (DyadicCell{3, 5}));
    EXPECT_EQ(finest_cell(1.0), (DyadicCell{kMaxCellDepth, (std::uint64_t{1} << kMaxCellDepth) - 1}));
}

TEST(UnitMap, NormalizesAndClamps) {
    const UnitMap m{10, 20};
    EXPECT_EQ(m(15), 0.5);
    EXPECT_EQ(m(25), 1.0);
    EXPECT_EQ(m.point(20), UnitMap::kLastPoint);
    EXPECT_EQ((UnitMap{3, 3})(3), 0.0);
}

TEST(StoringCell, Examples) {
    EXPECT_EQ(storing_cell(unit_box, {0, 0, 1}), (DyadicCell{0, 0}));
    EXPECT_EQ(storing_cell(unit_box, {0, 0.3, 0.8}), (DyadicCell{2, 2}));
    const auto small = storing_cell(unit_box, {0, 0.24, 0.26});
    EXPECT_EQ(small, (DyadicCell{7, 32}));
    EXPECT_EQ(small.end(), 0.2578125);
    // scaled boxes behave like the unit box
    EXPECT_EQ(storing_cell({0, 10}, {0, 3, 8}), (DyadicCell{2, 2}));
}

TEST(StoringCell, LargestFittingCellAtCenter) {
    Rng rng(1);
    for (int t = 0; t < 2000; ++t) {
        double a = rng.unit(), b = rng.unit();
        if (a > b) std::swap(a, b);
        if (t % 3 == 0) b = a + (b - a) * 1e-6;
        const auto c = storing_cell_normalized(a, b);
        const double center = a + 0.5 * (b - a);
        ASSERT_LE(c.start(), center);
        ASSERT_LT(center, c.end());
        if (c.depth == kMaxCellDepth) continue;
        ASSERT_GE(c.start(), a);
        ASSERT_LE(c.end(), b);
        // the parent does not fit
        const auto p = c.parent();
        if (c.depth > 0) {
            ASSERT_TRUE(p.start() < a || p.end() > b);
        }
    }
}

TEST(Neighborhood, Examples) {
    EXPECT_EQ(neighborhood(unit_box, {0, 0, 1}), row(0, 0, 0));
    EXPECT_EQ(neighborhood(unit_box, {0, 0.3, 0.8}), row(2, 1, 3));
    EXPECT_EQ(neighborhood(unit_box, {0, 0.24, 0.26}), row(7, 30, 33));
}

TEST(Neighborhood, CoversTheIntervalWithFewCells) {
    Rng rng(2);
    for (int t = 0; t < 2000; ++t) {
        double a = rng.unit(), b = rng.unit();
        if (a > b) std::swap(a, b);
        const auto cells = neighborhood_normalized(a, b);
        ASSERT_LE(cells.size(), 6u);
        ASSERT_LE(cells.front().start(), a);
        ASSERT_TRUE(cells.back().end() > b || cells.back().end() == 1.0);
        for (std::size_t k = 1; k < cells.size(); ++k) ASSERT_EQ(cells[k].index, cells[k - 1].index + 1);
    }
}

TEST(RegionQuadtree, Examples) {
    const auto whole = build_region_quadtree(on_unit({{0, 1}}));
    EXPECT_EQ(whole.leaf_count(), 1u);
    EXPECT_EQ(whole.node_count(), 1u);

    const auto two = build_region_quadtree(on_unit({{0, 0.4}, {0.6, 1.0}}));
    EXPECT_LE(two.node_count(), 7u);
    EXPECT_TRUE(verify_deflation(two));
    for (Handle h = two.first_leaf(); h != kNil; h = two.next(h)) EXPECT_GE(two.leaf(h).cell.depth, 1u);
}

// Intervals shrinking around one center: compression keeps the tree linear.
TEST(RegionQuadtree, NestedCentersStayLinear) {
    for (std::size_t n : {10u, 100u, 1000u}) {
        std::vector<Interval> ivs;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = std::ldexp(1.0, -static_cast<int>(i % 50)) * 0.3;
            ivs.push_back({i, 0.3 - w, 0.3 + w});
        }
        const RegionSet set(std::move(ivs), {-1, 1});
        const auto tree = build_region_quadtree(set);
        EXPECT_LE(tree.node_count(), 16 * n) << "n=" << n;
        EXPECT_TRUE(verify_deflation(tree));
    }
}

TEST(RegionQuadtree, FreshTreesPassTheAudit) {
    Rng rng(3);
    for (int t = 0; t < 300; ++t) {
        const auto set = random_instance(rng, 1 + rng.below(200), Shape::mixed);
        const auto tree = build_region_quadtree(set);
        ASSERT_EQ(tree.audit(kDeflation), "") << "trial " << t;
        ASSERT_LE(tree.node_count(), 16 * set.size());
    }
}

TEST(PreprocessQuadtree, Examples) {
    const auto disjoint = preprocess_quadtree(on_unit({{0, 0.1}, {0.2, 0.3}, {0.5, 0.6}}));
    EXPECT_EQ(disjoint.anchor.size(), 3u);
    EXPECT_EQ(disjoint.bottoms.size(), 3u);
    for (Handle h : disjoint.anchor) EXPECT_NE(h, kNil);

    const auto star = preprocess_quadtree(RegionSet::from_spans({{0, 10}, {1, 2}, {3, 4}, {5, 6}, {7, 8}}));
    const auto& leaf = star.tree.leaf(star.anchor[0]);
    EXPECT_EQ(leaf.start, star.storing[0].start());
    EXPECT_TRUE(star.storing[0].contains(leaf.cell));

    const auto single = preprocess_quadtree(RegionSet::from_spans({{0.2, 0.7}}));
    EXPECT_EQ(single.tree.leaf_count(), 1u);
    EXPECT_EQ(single.bottoms, (std::vector<Id>{0}));
}

TEST(PreprocessQuadtree, AnchorsStartTheirStoringCells) {
    Rng rng(4);
    for (int t = 0; t < 200; ++t) {
        const auto set = random_instance(rng, 1 + rng.below(150), Shape::mixed);
        const auto aux = preprocess_quadtree(set);
        for (Id id = 0; id < set.size(); ++id) {
            const auto& leaf = aux.tree.leaf(aux.anchor[id]);
            ASSERT_EQ(leaf.start, aux.storing[id].start());
            ASSERT_LE(leaf.end, aux.storing[id].end());
        }
    }
}

TEST(LocateInQuadtree, Examples) {
    const auto set = on_unit({{0, 0.4}, {0.6, 1.0}, {0.1, 0.9}});
    const auto aux = preprocess_quadtree(set);
    OpStats stats;
    const Handle home = aux.anchor[2];
    const double inside = aux.tree.leaf(home).start;
    EXPECT_EQ(locate(aux, 2, inside, stats), home);
    EXPECT_EQ(stats.node_traversals, 0u);
    for (double q : {0.1, 0.3, 0.45, 0.5, 0.77, 0.9}) {
        OpStats s;
        const Handle h = locate(aux, 2, q, s);
        EXPECT_EQ(detail::QuadTraits::place(aux.tree.leaf(h), q), 0);
        EXPECT_LE(s.node_traversals, 2 * aux.tree.index().height());
    }
    EXPECT_THROW(locate(aux, 0, 0.5, stats), InvalidInput);
}

TEST(LocateInQuadtree, CliqueQueriesAreCheap) {
    for (std::size_t k : {2u, 16u, 256u}) {
        const auto set = generate({"clique", k, 1, {}});
        const auto aux = preprocess_quadtree(set);
        Rng rng(k);
        for (int t = 0; t < 50; ++t) {
            OpStats s;
            const double q = set[0].left + rng.unit() * set[0].length();
            locate(aux, static_cast<Id>(rng.below(k)), q, s);
            EXPECT_LE(static_cast<double>(s.node_traversals), kWorkConstant * std::log2(double(k)));
        }
    }
}

TEST(InsertPoint, SplitsOnlyWhenCrowded) {
    const auto set = on_unit({{0, 1}, {0, 1}, {0, 1}});
    auto tree = build_region_quadtree(set, {});
    ASSERT_EQ(tree.leaf_count(), 1u);
    PointOracle oracle(std::vector<double>{0.1, 0.6, 0.3});
    OpStats stats;
    tree.insert_point(tree.first_leaf(), 0, 0.1, oracle, set, stats);
    EXPECT_EQ(stats.splits, 0u);
    tree.insert_point(tree.first_leaf(), 1, 0.6, oracle, set, stats);
    EXPECT_EQ(stats.splits, 0u);
    tree.insert_point(tree.first_leaf(), 2, 0.3, oracle, set, stats);
    EXPECT_EQ(stats.splits, 1u);
    EXPECT_EQ(tree.leaf_count(), 2u);
    EXPECT_TRUE(verify_deflation(tree));
    EXPECT_TRUE(points_in_place(tree, all_ids(3)));
    EXPECT_EQ(tree.live_residents(tree.first_leaf()), (std::vector<Id>{0, 2}));
}

TEST(InsertPoint, ClusteredPointsCompress) {
    const auto set = on_unit({{0, 1}, {0, 1}, {0, 1}});
    auto tree = build_region_quadtree(set, {});
    const std::vector<double> xs{0.3, 0.3 + 0x1p-42, 0.3 + 0x1p-41};
    PointOracle oracle(xs);
    OpStats stats;
    for (Id id = 0; id < 3; ++id) {
        OpStats scratch;
        const Handle h = tree.locate(tree.first_leaf(), xs[id], scratch);
        tree.insert_point(h, id, xs[id], oracle, set, stats);
    }
    const auto& links = tree.links();
    EXPECT_TRUE(std::any_of(links.begin(), links.end(), [](const CompressedLink& l) { return l.alive; }));
    EXPECT_LE(tree.node_count(), 16 * 3 + 8 * 3u);
    EXPECT_TRUE(verify_deflation(tree));
    EXPECT_TRUE(points_in_place(tree, all_ids(3)));
}

TEST(InsertPoint, RejectsForeignLeaf) {
    const auto set = on_unit({{0, 0.4}, {0.6, 1.0}, {0, 1}});
    auto tree = build_region_quadtree(set, {});
    PointOracle oracle(std::vector<double>{0.1, 0.7, 0.9});
    OpStats stats;
    EXPECT_THROW(tree.insert_point(tree.first_leaf(), 2, 0.9, oracle, set, stats), InvalidInput);
}

TEST(VerifyDeflation, Examples) {
    EXPECT_TRUE(verify_deflation(build_region_quadtree(RegionSet::from_spans({{0, 10}, {1, 2}, {3, 4}}))));
    const auto set = on_unit({{0, 1}, {0, 1}, {0, 1}});
    auto crowded = build_region_quadtree(set, {});
    const Handle h = crowded.first_leaf();
    crowded.add_resident_unchecked(h, 0, 0.1);
    crowded.add_resident_unchecked(h, 1, 0.5);
    EXPECT_TRUE(verify_deflation(crowded));
    crowded.add_resident_unchecked(h, 2, 0.9);
    EXPECT_FALSE(verify_deflation(crowded));
    EXPECT_TRUE(verify_deflation(crowded, 3));
}

TEST(ReconstructQuadtree, Examples) {
    {
        std::vector<std::pair<double, double>> spans;
        for (int i = 0; i < 64; ++i) spans.emplace_back(2 * i, 2 * i + 1);
        const auto set = RegionSet::from_spans(std::span<const std::pair<double, double>>(spans));
        PointOracle oracle(std::vector<double>(64, 0.0));
        const auto r = reconstruct_quadtree(preprocess_quadtree(set), oracle);
        EXPECT_EQ(r.stats, OpStats{});
        EXPECT_EQ(oracle.reveals(), 0u);
        EXPECT_TRUE(verify_deflation(r.tree));
    }
    {
        const RegionSet staircase({{0, 0, 3}, {1, 2, 5}, {2, 4, 7}}, {0, 7});
        Rng rng(5);
        for (int t = 0; t < 50; ++t) {
            const auto xs = random_points(rng, staircase, static_cast<unsigned>(t));
            PointOracle oracle(xs);
            const auto r = reconstruct_quadtree(preprocess_quadtree(staircase), oracle, {false, true});
            EXPECT_TRUE(verify_deflation(r.tree));
            for (Handle h = r.tree.first_leaf(); h != kNil; h = r.tree.next(h))
                EXPECT_LE(r.tree.resident_count(h), 2u);
            EXPECT_TRUE(points_in_place(r.tree, all_ids(3)));
        }
    }
    {
        const auto set = on_unit({{0, 0.5}, {0.2, 0.9}});
        // id 1 is the bottom and never asked; id 0 gets a point outside
        PointOracle outside(std::vector<double>{0.7, 0.5});
        EXPECT_THROW(reconstruct_quadtree(preprocess_quadtree(set), outside), OracleViolation);
    }
}

TEST(ReconstructQuadtree, CliqueWorkTracksAmbiguity) {
    for (std::size_t k : {2u, 8u, 64u, 512u}) {
        const auto set = generate({"clique", k, 1, {}});
        const auto xs = generate_points(set, PointMode::uniform, 7);
        PointOracle oracle(xs);
        const auto r = reconstruct_quadtree(preprocess_quadtree(set), oracle);
        EXPECT_LE(static_cast<double>(r.stats.node_traversals), kWorkConstant * log2_factorial(k)) << "k=" << k;
        EXPECT_TRUE(verify_deflation(r.tree));
    }
}

TEST(ReconstructQuadtree, RandomInstancesStayDeflated) {
    Rng rng(6);
    for (int t = 0; t < 400; ++t) {
        const auto set = random_instance(rng, 1 + rng.below(200), Shape::mixed);
        const auto xs = random_points(rng, set, static_cast<unsigned>(rng.below(5)));
        PointOracle oracle(xs);
        const auto r = reconstruct_quadtree(preprocess_quadtree(set), oracle, {true, t % 20 == 0});
        ASSERT_EQ(r.tree.audit(kDeflation), "") << "trial " << t;
        ASSERT_TRUE(points_in_place(r.tree, all_ids(set.size())));
        const auto& s = r.stats;
        ASSERT_LE(r.tree.node_count(), 16 * set.size() + 8 * s.insertions);
        ASSERT_LE(s.balance_changes, 3 * s.insertions + 1);
        for (const auto& step : r.steps) ASSERT_LE(step.overlapping, kOverlapFactor * step.contact + kOverlapSlack);
    }
}

TEST(TreeDump, ListsLeavesInOrder) {
    const auto set = on_unit({{0, 0.4}, {0.6, 1.0}});
    const auto tree = build_region_quadtree(set);
    const auto dump = io::tree_dump(tree);
    ASSERT_EQ(dump["cells"].size(), tree.leaf_count());
    double cursor = 0;
    for (const auto& c : dump["cells"]) {
        ASSERT_TRUE(c.contains("depth"));
        const DyadicCell cell{c["depth"].get<unsigned>(), c["index"].get<std::uint64_t>()};
        EXPECT_EQ(cell.start(), cursor);
        cursor = cell.end();
    }
    EXPECT_EQ(cursor, 1.0);
}
