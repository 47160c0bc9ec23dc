#include <gtest/gtest.h>

#include "tacplus/common.hpp"

using namespace tacplus;

TEST(ByteIo, RoundTripsScalarsLittleEndian) {
    ByteWriter w;
    w.u8(0xAB);
    w.u16(0x1234);
    w.u32(0xDEADBEEF);
    w.u64(0x0102030405060708ull);
    w.f32(1.5f);
    w.f64(-2.25);
    const auto buf = w.take();
    EXPECT_EQ(buf[1], 0x34);
    EXPECT_EQ(buf[2], 0x12);
    ByteReader r(buf);
    EXPECT_EQ(r.u8(), 0xAB);
    EXPECT_EQ(r.u16(), 0x1234);
    EXPECT_EQ(r.u32(), 0xDEADBEEFu);
    EXPECT_EQ(r.u64(), 0x0102030405060708ull);
    EXPECT_EQ(r.f32(), 1.5f);
    EXPECT_EQ(r.f64(), -2.25);
    EXPECT_TRUE(r.at_end());
    EXPECT_THROW(r.u8(), CorruptStream);
}

TEST(ByteIo, MagicMismatchIsCorrupt) {
    ByteWriter w;
    w.magic("ABCD");
    const auto buf = w.take();
    ByteReader r(buf);
    EXPECT_THROW(r.expect_magic("ABCE"), CorruptStream);
}

TEST(ByteIo, ValueWidthFollowsType) {
    ByteWriter w;
    w.value(ValueType::F32, 0.1);
    w.value(ValueType::F64, 0.1);
    EXPECT_EQ(w.size(), 12u);
    const auto buf = w.take();
    ByteReader r(buf);
    EXPECT_EQ(r.value(ValueType::F32), static_cast<double>(0.1f));
    EXPECT_EQ(r.value(ValueType::F64), 0.1);
}

TEST(Bits, PackUnpack) {
    std::vector<std::uint8_t> flags{1, 0, 0, 1, 1, 1, 0, 1, 0, 1};
    const auto packed = pack_bits(flags);
    ASSERT_EQ(packed.size(), 2u);
    EXPECT_EQ(packed[0], 0b10111001);
    EXPECT_EQ(unpack_bits(packed, flags.size()), flags);
    EXPECT_THROW(unpack_bits(packed, 17), CorruptStream);
}

TEST(Array3, XFastestLayout) {
    Array3<int> a(Dims3{3, 2, 2}, 0);
    a(2, 1, 1) = 5;
    EXPECT_EQ(a[2 + 3 * (1 + 2 * 1)], 5);
    EXPECT_THROW(Array3<int>(Dims3{2, 2, 2}, std::vector<int>(7)), InvalidArgument);
}

TEST(ValueType, RoundTo) {
    EXPECT_EQ(round_to(ValueType::F64, 0.1), 0.1);
    EXPECT_EQ(round_to(ValueType::F32, 0.1), static_cast<double>(0.1f));
    EXPECT_EQ(value_bits(ValueType::F32), 32u);
    EXPECT_EQ(value_bits(ValueType::F64), 64u);
}
