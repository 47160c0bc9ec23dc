#include <gtest/gtest.h>

#include <random>
#include <set>
#include <tuple>

#include "support.hpp"

using namespace tacplus;
using tacplus::testing::level_from_flags;
using tacplus::testing::random_flags;

namespace {

using Cell = std::tuple<std::size_t, std::size_t, std::size_t>;

UnitBlockGrid grid_of(const Array3<std::uint8_t>& f) { return {f, 1}; }

/// Largest s such that the s^3 cube with maximal corner (x,y,z) is fully occupied.
std::int32_t brute_bs(const Array3<std::uint8_t>& f, std::size_t x, std::size_t y, std::size_t z) {
    std::int32_t best = 0;
    for (std::size_t s = 1; s <= std::min({x, y, z}) + 1; ++s) {
        bool full = true;
        for (std::size_t k = 0; k < s && full; ++k)
            for (std::size_t j = 0; j < s && full; ++j)
                for (std::size_t i = 0; i < s && full; ++i) full = f(x - i, y - j, z - k) != 0;
        if (!full) break;
        best = static_cast<std::int32_t>(s);
    }
    return best;
}

std::set<Cell> mask_set(const Array3<std::uint8_t>& f) {
    std::set<Cell> s;
    const auto& d = f.dims();
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x)
                if (f(x, y, z)) s.emplace(x, y, z);
    return s;
}

/// Union of plan blocks; fails on overlap, empty coverage or out-of-range cells.
::testing::AssertionResult covers_exactly(const PartitionPlan& plan, const Array3<std::uint8_t>& f) {
    std::set<Cell> seen;
    const auto& d = f.dims();
    for (const auto& sb : plan.blocks)
        for (std::size_t k = 0; k < sb.shape.nz; ++k)
            for (std::size_t j = 0; j < sb.shape.ny; ++j)
                for (std::size_t i = 0; i < sb.shape.nx; ++i) {
                    const std::size_t x = sb.origin.x + i, y = sb.origin.y + j, z = sb.origin.z + k;
                    if (x >= d.nx || y >= d.ny || z >= d.nz) return ::testing::AssertionFailure() << "out of range";
                    if (!f(x, y, z)) return ::testing::AssertionFailure() << "covers empty block";
                    if (!seen.emplace(x, y, z).second) return ::testing::AssertionFailure() << "overlap";
                }
    if (seen != mask_set(f)) return ::testing::AssertionFailure() << "union differs from mask";
    return ::testing::AssertionSuccess();
}

Dims3 random_dims(std::mt19937_64& rng, std::size_t max_side) {
    std::uniform_int_distribution<std::size_t> side(1, max_side);
    return {side(rng), side(rng), side(rng)};
}

}  // namespace

// --- NaST

TEST(Nast, EmptyGridGivesEmptyPlan) {
    EXPECT_TRUE(nast_partition(grid_of(Array3<std::uint8_t>({3, 3, 3}, 0))).blocks.empty());
}

TEST(Nast, FullGridGivesOneBlockPerUnit) {
    EXPECT_EQ(nast_partition(grid_of(Array3<std::uint8_t>({2, 2, 2}, 1))).blocks.size(), 8u);
}

TEST(Nast, OriginsAreFlaggedCoordinatesInScanOrder) {
    std::mt19937_64 rng(1);
    Array3<std::uint8_t> f({4, 4, 4}, 0);
    std::set<std::size_t> picks;
    while (picks.size() < 5) picks.insert(rng() % 64);
    for (auto i : picks) f[i] = 1;
    const auto plan = nast_partition(grid_of(f));
    ASSERT_EQ(plan.blocks.size(), 5u);
    auto it = picks.begin();
    for (const auto& sb : plan.blocks) {
        const std::size_t i = *it++;
        EXPECT_EQ(sb.origin, (Index3{i % 4, (i / 4) % 4, i / 16}));
        EXPECT_EQ(sb.shape, (Dims3{1, 1, 1}));
    }
}

// --- OpST

TEST(OpstBs, FullTwoCubed) {
    const auto field = opst_bs_init(Array3<std::uint8_t>({2, 2, 2}, 1));
    for (std::size_t z = 0; z < 2; ++z)
        for (std::size_t y = 0; y < 2; ++y)
            for (std::size_t x = 0; x < 2; ++x)
                EXPECT_EQ(field.bs(x, y, z), x && y && z ? 2 : 1);
    EXPECT_EQ(field.max_side, 2);
}

TEST(OpstBs, PlanarFigureAnalog) {
    // A single z-slab is the 2D case: block (1,1) has three BS=1 predecessors and gets 2.
    Array3<std::uint8_t> f({3, 3, 2}, 0);
    for (std::size_t z = 0; z < 2; ++z)
        for (std::size_t y = 0; y < 2; ++y)
            for (std::size_t x = 0; x < 2; ++x) f(x, y, z) = 1;
    const auto field = opst_bs_init(f);
    EXPECT_EQ(field.bs(1, 1, 1), 2);
    EXPECT_EQ(field.bs(2, 1, 1), 0);
}

TEST(OpstBs, MatchesBruteForceOnRandomMasks) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const auto f = random_flags(rng, random_dims(rng, 8), 0.5 + 0.45 * (trial % 3) / 2.0);
        const auto field = opst_bs_init(f);
        const auto& d = f.dims();
        for (std::size_t z = 0; z < d.nz; ++z)
            for (std::size_t y = 0; y < d.ny; ++y)
                for (std::size_t x = 0; x < d.nx; ++x) ASSERT_EQ(field.bs(x, y, z), brute_bs(f, x, y, z));
    }
}

TEST(Opst, FullGridIsOneCube) {
    const auto plan = opst_partition(grid_of(Array3<std::uint8_t>({4, 4, 4}, 1)));
    ASSERT_EQ(plan.blocks.size(), 1u);
    EXPECT_EQ(plan.blocks[0], (SubBlock{{0, 0, 0}, {4, 4, 4}}));
}

TEST(Opst, FirstExtractionIsAtTheFarCorner) {
    Array3<std::uint8_t> f({3, 3, 2}, 0);
    for (std::size_t z = 0; z < 2; ++z)
        for (std::size_t y = 1; y < 3; ++y)
            for (std::size_t x = 1; x < 3; ++x) f(x, y, z) = 1;
    f(0, 0, 0) = 1;
    std::vector<SubBlock> order;
    opst_partition(grid_of(f), [&](const auto&, const auto&, const SubBlock& sb) { order.push_back(sb); });
    ASSERT_EQ(order.size(), 2u);
    EXPECT_EQ(order[0], (SubBlock{{1, 1, 0}, {2, 2, 2}}));
    EXPECT_EQ(order[1], (SubBlock{{0, 0, 0}, {1, 1, 1}}));
}

TEST(Opst, PlanGroupedBySideDescending) {
    std::mt19937_64 rng(8);
    const auto plan = opst_partition(grid_of(random_flags(rng, {8, 8, 8}, 0.8)));
    for (std::size_t i = 1; i < plan.blocks.size(); ++i)
        EXPECT_GE(plan.blocks[i - 1].shape.nx, plan.blocks[i].shape.nx);
}

TEST(OpstUpdate, IsolatedExtractionChangesNothingElse) {
    Array3<std::uint8_t> f({5, 5, 5}, 0);
    f(2, 2, 2) = 1;
    auto field = opst_bs_init(f);
    f(2, 2, 2) = 0;
    field.bs(2, 2, 2) = 0;
    const auto before = field.bs;
    opst_update_bs(field, f, {2, 2, 2}, 1, field.max_side);
    EXPECT_EQ(field.bs, before);
    for (auto v : field.bs.vec()) EXPECT_EQ(v, 0);
}

TEST(OpstUpdate, MatchesFullRecomputationAfterEveryExtraction) {
    std::mt19937_64 rng(99);
    std::size_t checks = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto f = random_flags(rng, random_dims(rng, 10), 0.6 + 0.35 * (trial % 2));
        opst_partition(grid_of(f), [&](const Array3<std::uint8_t>& cur, const BSField& field, const SubBlock&) {
            ASSERT_EQ(field.bs, opst_bs_init(cur).bs);
            ++checks;
        });
    }
    EXPECT_GT(checks, 1000u);
}

TEST(Opst, CoversRandomMasks) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto f = random_flags(rng, random_dims(rng, 10), (trial % 10) / 9.0);
        ASSERT_TRUE(covers_exactly(opst_partition(grid_of(f)), f));
    }
}

// --- AKDTree

TEST(Akd, FullGridIsSingleLeaf) {
    const auto res = akdtree_partition(grid_of(Array3<std::uint8_t>({4, 4, 4}, 1)));
    ASSERT_EQ(res.tree.nodes.size(), 1u);
    EXPECT_TRUE(res.tree.nodes[0].is_leaf());
    ASSERT_EQ(res.plan.blocks.size(), 1u);
    EXPECT_EQ(res.plan.blocks[0], (SubBlock{{0, 0, 0}, {4, 4, 4}}));
}

TEST(Akd, DiffFormulasOnLowerZHalf) {
    const OctantCounts c{4, 4, 4, 4, 0, 0, 0, 0};
    const auto d = octant_diffs(c);
    EXPECT_EQ(d[0], 0);
    EXPECT_EQ(d[1], 0);
    EXPECT_EQ(d[2], 16);
    EXPECT_EQ(max_diff_axis(d), 2);
}

TEST(Akd, LowerZHalfSplitsIntoFullAndEmptyFlatLeaves) {
    Array3<std::uint8_t> f({4, 4, 4}, 0);
    for (std::size_t z = 0; z < 2; ++z)
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t x = 0; x < 4; ++x) f(x, y, z) = 1;
    const auto res = akdtree_partition(grid_of(f));
    const auto& root = res.tree.nodes[0];
    EXPECT_EQ(root.split_axis, 2);
    ASSERT_EQ(res.tree.nodes.size(), 3u);
    const auto& lo = res.tree.nodes[root.left];
    const auto& hi = res.tree.nodes[root.right];
    EXPECT_EQ(lo.kind, KDKind::Flat);
    EXPECT_TRUE(lo.is_leaf());
    EXPECT_EQ(lo.count, 32u);
    EXPECT_TRUE(hi.is_leaf());
    EXPECT_EQ(hi.count, 0u);
    ASSERT_EQ(res.plan.blocks.size(), 1u);
    EXPECT_EQ(res.plan.blocks[0], (SubBlock{{0, 0, 0}, {4, 4, 2}}));
}

TEST(Akd, TiesPreferXThenYThenZ) {
    EXPECT_EQ(max_diff_axis({3, 3, 3}), 0);
    EXPECT_EQ(max_diff_axis({1, 3, 3}), 1);
    EXPECT_EQ(max_diff_axis({3, 3, 3}, {false, true, true}), 1);
}

TEST(Akd, StructureOnRandomMasks) {
    std::mt19937_64 rng(77);
    int checked_cubes = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto f = random_flags(rng, random_dims(rng, 8), (trial % 10) / 9.0);
        const auto res = akdtree_partition(grid_of(f));
        ASSERT_TRUE(covers_exactly(res.plan, f));
        const auto& t = res.tree;
        for (const auto& n : t.nodes) {
            std::size_t cnt = 0;
            for (std::size_t k = 0; k < n.shape.nz; ++k)
                for (std::size_t j = 0; j < n.shape.ny; ++j)
                    for (std::size_t i = 0; i < n.shape.nx; ++i) {
                        const std::size_t x = n.origin.x + i, y = n.origin.y + j, z = n.origin.z + k;
                        if (x < f.dims().nx && y < f.dims().ny && z < f.dims().nz && f(x, y, z)) ++cnt;
                    }
            ASSERT_EQ(n.count, cnt);
            if (n.is_leaf()) ASSERT_TRUE(cnt == 0 || cnt == n.shape.volume());
            if (n.kind == KDKind::Cube && n.counted && checked_cubes < 50) {
                const std::size_t h = n.shape.nx / 2;
                OctantCounts c{};
                for (int o = 0; o < 8; ++o) {
                    const Index3 oo{n.origin.x + (o & 1) * h, n.origin.y + ((o >> 1) & 1) * h,
                                    n.origin.z + ((o >> 2) & 1) * h};
                    for (std::size_t k = 0; k < h; ++k)
                        for (std::size_t j = 0; j < h; ++j)
                            for (std::size_t i = 0; i < h; ++i) {
                                const std::size_t x = oo.x + i, y = oo.y + j, z = oo.z + k;
                                if (x < f.dims().nx && y < f.dims().ny && z < f.dims().nz && f(x, y, z)) ++c[o];
                            }
                }
                ASSERT_EQ(n.octants, c);
                const long long c1 = c[0], c2 = c[1], c3 = c[2], c4 = c[3], c5 = c[4], c6 = c[5], c7 = c[6],
                                c8 = c[7];
                const long long dx = std::llabs(c1 + c3 + c5 + c7 - c2 - c4 - c6 - c8);
                const long long dy = std::llabs(c1 + c2 + c5 + c6 - c3 - c4 - c7 - c8);
                const long long dz = std::llabs(c1 + c2 + c3 + c4 - c5 - c6 - c7 - c8);
                int want = 0;
                if (dy > dx) want = 1;
                if (dz > std::max(dx, dy)) want = 2;
                if (!n.is_leaf()) ASSERT_EQ(n.split_axis, want);
                ++checked_cubes;
            }
        }
        ASSERT_LE(t.counting_passes, t.cube_nodes());
        ASSERT_LE(t.counting_passes, (t.nodes.size() + 2) / 3 + 1);
    }
    EXPECT_EQ(checked_cubes, 50);
}

// --- reassemble / extract

TEST(Reassemble, EmptyPlanGivesZeroLevel) {
    const auto l = reassemble(PartitionPlan{}, {}, {8, 8, 8}, 4, 0);
    for (double v : l.values.vec()) EXPECT_EQ(v, 0.0);
    for (auto o : l.occupancy.vec()) EXPECT_EQ(o, 0);
}

TEST(Reassemble, RoundTripsAllStrategies) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        const auto flags = random_flags(rng, random_dims(rng, 5), 0.6);
        const auto level = level_from_flags(flags, 2, 0, trial);
        const auto grid = make_unit_block_grid(level);
        for (const auto& plan : {nast_partition(grid), opst_partition(grid), akdtree_partition(grid).plan}) {
            const auto blocks = extract_subblocks(level, plan);
            ASSERT_EQ(reassemble(plan, blocks, level.dims(), 2, 0), level);
        }
    }
}

TEST(Reassemble, OverlapRejected) {
    PartitionPlan p;
    p.blocks = {{{0, 0, 0}, {2, 2, 2}}, {{1, 1, 1}, {1, 1, 1}}};
    std::vector<Array3<double>> v{Array3<double>({4, 4, 4}, 1.0), Array3<double>({2, 2, 2}, 1.0)};
    EXPECT_THROW(reassemble(p, v, {8, 8, 8}, 2, 0), StructureError);
}

TEST(PlanIo, RoundTrip) {
    std::mt19937_64 rng(4);
    const auto plan = opst_partition(grid_of(random_flags(rng, {6, 5, 4}, 0.7)));
    ByteWriter w;
    write_plan(w, plan);
    EXPECT_EQ(w.size(), plan_descriptor_bytes(plan));
    const auto buf = w.take();
    ByteReader r(buf);
    const auto tag = static_cast<Strategy>(r.u8());
    EXPECT_EQ(read_plan_body(r, tag), plan);
}

// --- GSP

namespace {

AMRLevel two_block_level(double fill) {
    // Blocks (0,0,0) empty, (1,0,0) occupied with constant `fill`; b = 4.
    Array3<std::uint8_t> f({2, 1, 1}, 0);
    f(1, 0, 0) = 1;
    auto l = level_from_flags(f, 4);
    for (std::size_t i = 0; i < l.values.size(); ++i)
        if (l.occupancy[i]) l.values[i] = fill;
    return l;
}

}  // namespace

TEST(Gsp, SingleNeighborFillsAdjacentSlab) {
    auto l = two_block_level(0.0);
    // First boundary slice (x = 4) has mean 4.2; deeper slices differ.
    for (std::size_t z = 0; z < 4; ++z)
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t x = 4; x < 8; ++x) l.values(x, y, z) = x == 4 ? 4.2 + 0.1 * (y % 2 ? 1 : -1) : 9.0;
    const auto res = gsp_pad(l);
    for (std::size_t z = 0; z < 4; ++z)
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t x = 0; x < 4; ++x) EXPECT_NEAR(res.values(x, y, z), x == 3 ? 4.2 : 0.0, 1e-12);
    ASSERT_EQ(res.metadata.padded_blocks.size(), 1u);
}

TEST(Gsp, OrthogonalNeighborsAverageOnEdge) {
    Array3<std::uint8_t> f({2, 2, 1}, 0);
    f(1, 0, 0) = f(0, 1, 0) = 1;
    auto l = level_from_flags(f, 2);
    for (std::size_t z = 0; z < 2; ++z)
        for (std::size_t y = 0; y < 2; ++y) {
            l.values(2, y, z) = l.values(3, y, z) = 4.0;
        }
    for (std::size_t z = 0; z < 2; ++z)
        for (std::size_t x = 0; x < 2; ++x) l.values(x, 2, z) = l.values(x, 3, z) = 6.0;
    const auto res = gsp_pad(l);
    EXPECT_DOUBLE_EQ(res.values(1, 1, 0), 5.0);  // on both slabs
    EXPECT_DOUBLE_EQ(res.values(1, 0, 0), 4.0);  // +x slab only
    EXPECT_DOUBLE_EQ(res.values(0, 1, 0), 6.0);  // +y slab only
    EXPECT_DOUBLE_EQ(res.values(0, 0, 0), 0.0);
}

TEST(Gsp, IsolatedEmptyBlockUntouched) {
    Array3<std::uint8_t> f({3, 1, 1}, 0);
    f(2, 0, 0) = 1;
    const auto l = level_from_flags(f, 2);
    const auto res = gsp_pad(l);
    for (std::size_t z = 0; z < 2; ++z)
        for (std::size_t y = 0; y < 2; ++y)
            for (std::size_t x = 0; x < 2; ++x) EXPECT_EQ(res.values(x, y, z), 0.0);
}

TEST(Gsp, LayersAndSlices) {
    auto l = two_block_level(2.0);
    for (std::size_t z = 0; z < 4; ++z)
        for (std::size_t y = 0; y < 4; ++y) l.values(5, y, z) = 4.0;
    const auto res = gsp_pad(l, 2, 2);
    EXPECT_DOUBLE_EQ(res.values(3, 0, 0), 3.0);
    EXPECT_DOUBLE_EQ(res.values(2, 1, 1), 3.0);
    EXPECT_DOUBLE_EQ(res.values(1, 1, 1), 0.0);
    EXPECT_THROW(gsp_pad(l, 5, 1), InvalidArgument);
    EXPECT_THROW(gsp_pad(l, 1, 0), InvalidArgument);
}

TEST(Gsp, UnpadRestoresLevel) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        const auto l = level_from_flags(random_flags(rng, random_dims(rng, 4), 0.5), 2, 0, trial);
        const auto res = gsp_pad(l);
        const auto back = gsp_unpad(res.values, res.metadata, l.occupancy, 2);
        ASSERT_EQ(back, l);
    }
}

TEST(Gsp, UnpadEmptyMetadataIsIdentity) {
    std::mt19937_64 rng(1);
    const auto l = level_from_flags(random_flags(rng, {3, 3, 3}, 0.5), 2);
    EXPECT_EQ(gsp_unpad(l.values, GspMetadata{}, l.occupancy, 2), l);
}

TEST(Gsp, UnpadRejectsInconsistentMetadata) {
    const auto l = two_block_level(1.0);
    GspMetadata m;
    m.padded_blocks = {{1, 0, 0}};
    EXPECT_THROW(gsp_unpad(l.values, m, l.occupancy, 4), StructureError);
    m.padded_blocks = {{5, 0, 0}};
    EXPECT_THROW(gsp_unpad(l.values, m, l.occupancy, 4), StructureError);
}
