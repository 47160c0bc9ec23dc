#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace tacplus;
using tacplus::testing::level_from_flags;
using tacplus::testing::random_flags;
using tacplus::testing::two_level;

namespace {

AMRLevel constant_level(Dims3 d, std::size_t b, double v) {
    AMRLevel l;
    l.unit_block_size = b;
    l.values = Array3<double>(d, v);
    l.occupancy = Array3<std::uint8_t>(d, 1);
    return l;
}

}  // namespace

TEST(Density, EmptyIsZero) {
    Array3<std::uint8_t> f(Dims3{2, 2, 2}, 0);
    EXPECT_EQ(density(level_from_flags(f, 2)), 0.0);
}

TEST(Density, ThreeOfEight) {
    Array3<std::uint8_t> f(Dims3{2, 2, 2}, 0);
    f(0, 0, 0) = f(1, 0, 1) = f(1, 1, 1) = 1;
    EXPECT_DOUBLE_EQ(density(level_from_flags(f, 2)), 0.375);
}

TEST(Upsample, SingleCellReplicates) {
    const auto l = constant_level({1, 1, 1}, 1, 5.0);
    const auto up = upsample(l, 2);
    EXPECT_EQ(up.values.dims(), (Dims3{2, 2, 2}));
    for (double v : up.values.vec()) EXPECT_EQ(v, 5.0);
}

TEST(Upsample, RateOneIsIdentity) {
    std::mt19937_64 rng(3);
    const auto l = level_from_flags(random_flags(rng, {2, 2, 2}, 0.5), 2);
    const auto up = upsample(l, 1);
    EXPECT_EQ(up.values, l.values);
    EXPECT_EQ(up.occupancy, l.occupancy);
}

TEST(Upsample, RateZeroRejected) {
    EXPECT_THROW(upsample(constant_level({1, 1, 1}, 1, 1.0), 0), InvalidArgument);
}

TEST(Upsample, EachCellReplicatedEightTimes) {
    AMRLevel l = constant_level({2, 2, 2}, 1, 0.0);
    for (std::size_t i = 0; i < 8; ++i) l.values[i] = 10.0 + static_cast<double>(i);
    const auto up = upsample(l, 2);
    std::vector<int> hits(8, 0);
    for (std::size_t z = 0; z < 4; ++z)
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t x = 0; x < 4; ++x) {
                const std::size_t src = (x / 2) + 2 * ((y / 2) + 2 * (z / 2));
                EXPECT_EQ(up.values(x, y, z), l.values[src]);
                ++hits[src];
            }
    for (int h : hits) EXPECT_EQ(h, 8);
}

TEST(Flatten, SingleLevelCopies) {
    std::mt19937_64 rng(4);
    AMRDataset ds;
    ds.value_type = ValueType::F64;
    ds.levels.push_back(level_from_flags(Array3<std::uint8_t>({2, 2, 2}, 1), 4));
    const auto g = flatten_to_uniform(ds);
    EXPECT_EQ(g.values, ds.levels[0].values);
}

TEST(Flatten, EmptyFineEqualsUpsampledCoarse) {
    Array3<std::uint8_t> none({2, 2, 2}, 0);
    const auto ds = two_level(none, 4);
    const auto g = flatten_to_uniform(ds);
    EXPECT_EQ(g.values, upsample(ds.levels[1], 2).values);
}

TEST(Flatten, OverlapIsStructureError) {
    Array3<std::uint8_t> f({2, 2, 2}, 0);
    f[0] = 1;
    auto ds = two_level(f, 4);
    ds.levels[1] = level_from_flags(Array3<std::uint8_t>({2, 2, 2}, 1), 2, 1);
    try {
        flatten_to_uniform(ds);
        FAIL() << "expected StructureError";
    } catch (const StructureError& e) {
        EXPECT_NE(std::string(e.what()).find("patch-based"), std::string::npos);
    }
}

TEST(Flatten, MissingOwnerIsStructureError) {
    Array3<std::uint8_t> f({2, 2, 2}, 0);
    auto ds = two_level(f, 4);
    ds.levels[1].occupancy[0] = 0;
    EXPECT_THROW(ownership(geometry_of(ds)), StructureError);
}

TEST(SplitUniform, CoarseValueIsReplicaMean) {
    Array3<std::uint8_t> none({1, 1, 1}, 0);
    AMRDataset ds;
    ds.value_type = ValueType::F64;
    ds.levels.push_back(level_from_flags(none, 2, 0));
    ds.levels.push_back(constant_level({1, 1, 1}, 1, 0.0));
    ds.levels[1].level_index = 1;
    UniformGrid g{Array3<double>({2, 2, 2}, std::vector<double>{1, 1, 1, 1, 3, 3, 3, 3}),
                  ownership(geometry_of(ds))};
    const auto out = split_uniform(g, geometry_of(ds));
    EXPECT_DOUBLE_EQ(out.levels[1].values[0], 2.0);
}

TEST(SplitUniform, InvertsFlatten) {
    std::mt19937_64 rng(9);
    const auto ds = two_level(random_flags(rng, {4, 2, 2}, 0.4), 4);
    EXPECT_EQ(split_uniform(flatten_to_uniform(ds), geometry_of(ds)), ds);
}

TEST(SplitUniform, DimsMismatch) {
    std::mt19937_64 rng(9);
    const auto ds = two_level(random_flags(rng, {2, 2, 2}, 0.4), 4);
    UniformGrid g{Array3<double>({4, 4, 4}, 0.0), {}};
    EXPECT_THROW(split_uniform(g, geometry_of(ds)), StructureError);
}

TEST(Validation, MisalignedMask) {
    AMRLevel l = constant_level({4, 4, 4}, 2, 1.0);
    l.occupancy(1, 0, 0) = 0;
    l.values(1, 0, 0) = 0.0;
    EXPECT_THROW(validate_level(l), StructureError);
}

TEST(Validation, NonzeroSentinel) {
    AMRLevel l = level_from_flags(Array3<std::uint8_t>({2, 2, 2}, 0), 2);
    l.values[0] = 1.0;
    EXPECT_THROW(validate_level(l), StructureError);
}

TEST(Validation, IndivisibleDims) {
    AMRLevel l = constant_level({5, 4, 4}, 2, 1.0);
    EXPECT_THROW(validate_level(l), StructureError);
}

TEST(GlobalRange, OverOccupiedCellsOnly) {
    std::mt19937_64 rng(2);
    auto ds = two_level(random_flags(rng, {2, 2, 2}, 0.5), 4);
    double lo = 1e300, hi = -1e300;
    for (const auto& l : ds.levels)
        for (std::size_t i = 0; i < l.values.size(); ++i)
            if (l.occupancy[i]) {
                lo = std::min(lo, l.values[i]);
                hi = std::max(hi, l.values[i]);
            }
    EXPECT_EQ(global_range(ds), hi - lo);
}

TEST(Amrc, RoundTripBitExact) {
    std::mt19937_64 rng(5);
    for (auto vt : {ValueType::F32, ValueType::F64}) {
        const auto ds = two_level(random_flags(rng, {4, 2, 2}, 0.5), 4, vt);
        const auto bytes = write_amrc(ds);
        EXPECT_EQ(read_amrc(bytes), ds);
    }
}

TEST(Amrc, TruncatedAndTrailingAreCorrupt) {
    std::mt19937_64 rng(5);
    const auto ds = two_level(random_flags(rng, {2, 2, 2}, 0.5), 4);
    auto bytes = write_amrc(ds);
    auto cut = bytes;
    cut.resize(cut.size() - 3);
    EXPECT_THROW(read_amrc(cut), CorruptStream);
    bytes.push_back(0);
    EXPECT_THROW(read_amrc(bytes), CorruptStream);
}
