#ifndef TACPLUS_PARTITION_PLAN_HPP
#define TACPLUS_PARTITION_PLAN_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tacplus/amr_model.hpp"
#include "tacplus/common.hpp"

namespace tacplus {

/// Per-level pre-processing strategy. Values are the on-disk tags.
enum class Strategy : std::uint8_t {
    NaST = 0,
    OpST = 1,
    AKDTree = 2,
    GSP = 3,
    ZeroFill = 4,
    Linear1D = 5,
    Uniform3D = 6,
};

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::NaST: return "nast";
        case Strategy::OpST: return "opst";
        case Strategy::AKDTree: return "akdtree";
        case Strategy::GSP: return "gsp";
        case Strategy::ZeroFill: return "zf";
        case Strategy::Linear1D: return "1d";
        case Strategy::Uniform3D: return "3d";
    }
    return "?";
}

/// True for strategies whose plan is a list of sub-blocks (vs. an occupancy bitmap).
inline bool uses_subblocks(Strategy s) {
    return s == Strategy::NaST || s == Strategy::OpST || s == Strategy::AKDTree;
}

/// Unit-block occupancy of one level. flags(x,y,z) is 1 iff all b^3 cells of
/// that block are occupied.
struct UnitBlockGrid {
    Array3<std::uint8_t> flags;
    std::size_t unit_block_size = 16;

    const Dims3& dims() const { return flags.dims(); }
    std::size_t count() const {
        std::size_t n = 0;
        for (auto f : flags.vec()) n += f ? 1 : 0;
        return n;
    }
};

inline UnitBlockGrid make_unit_block_grid(const AMRLevel& level) {
    validate_mask(level.occupancy, level.unit_block_size);
    return {block_flags(level), level.unit_block_size};
}

/// Box of unit blocks: origin and extent, both in unit-block coordinates.
struct SubBlock {
    Index3 origin;
    Dims3 shape;

    std::size_t volume() const { return shape.volume(); }
    bool operator==(const SubBlock&) const = default;
};

/// Shape with axes sorted; blocks that differ only by orientation share a tag.
inline std::array<std::size_t, 3> canonical_shape(const Dims3& s) {
    std::array<std::size_t, 3> a{s.nx, s.ny, s.nz};
    std::sort(a.begin(), a.end());
    return a;
}

struct PartitionPlan {
    Strategy strategy = Strategy::NaST;
    std::vector<SubBlock> blocks;

    bool operator==(const PartitionPlan&) const = default;
};

/// Copy each sub-block's cells out of the level, in plan order.
inline std::vector<Array3<double>> extract_subblocks(const AMRLevel& level,
                                                     const PartitionPlan& plan) {
    const std::size_t b = level.unit_block_size;
    std::vector<Array3<double>> out;
    out.reserve(plan.blocks.size());
    for (const auto& sb : plan.blocks) {
        const Dims3 cd{sb.shape.nx * b, sb.shape.ny * b, sb.shape.nz * b};
        const Index3 o{sb.origin.x * b, sb.origin.y * b, sb.origin.z * b};
        if (o.x + cd.nx > level.dims().nx || o.y + cd.ny > level.dims().ny ||
            o.z + cd.nz > level.dims().nz) {
            throw StructureError("sub-block exceeds level bounds");
        }
        Array3<double> a(cd);
        for (std::size_t z = 0; z < cd.nz; ++z)
            for (std::size_t y = 0; y < cd.ny; ++y)
                for (std::size_t x = 0; x < cd.nx; ++x)
                    a(x, y, z) = level.values(o.x + x, o.y + y, o.z + z);
        out.push_back(std::move(a));
    }
    return out;
}

/// Write sub-block values back at their saved coordinates. Cells outside every
/// sub-block are 0 and unoccupied.
inline AMRLevel reassemble(const PartitionPlan& plan, const std::vector<Array3<double>>& values,
                           const Dims3& level_dims, std::size_t b, int level_index = 0) {
    if (values.size() != plan.blocks.size()) {
        throw StructureError("sub-block value count does not match plan");
    }
    if (b == 0 || level_dims.nx % b || level_dims.ny % b || level_dims.nz % b) {
        throw StructureError("level dims not divisible by unit block size");
    }
    AMRLevel level;
    level.level_index = level_index;
    level.unit_block_size = b;
    level.values = Array3<double>(level_dims, 0.0);
    level.occupancy = Array3<std::uint8_t>(level_dims, 0);
    const Dims3 bd{level_dims.nx / b, level_dims.ny / b, level_dims.nz / b};
    Array3<std::uint8_t> taken(bd, 0);
    for (std::size_t i = 0; i < plan.blocks.size(); ++i) {
        const auto& sb = plan.blocks[i];
        if (sb.origin.x + sb.shape.nx > bd.nx || sb.origin.y + sb.shape.ny > bd.ny ||
            sb.origin.z + sb.shape.nz > bd.nz) {
            throw StructureError("sub-block exceeds level bounds");
        }
        const Dims3 cd{sb.shape.nx * b, sb.shape.ny * b, sb.shape.nz * b};
        if (values[i].dims() != cd) throw StructureError("sub-block values have wrong dims");
        for (std::size_t z = 0; z < sb.shape.nz; ++z)
            for (std::size_t y = 0; y < sb.shape.ny; ++y)
                for (std::size_t x = 0; x < sb.shape.nx; ++x) {
                    auto& t = taken(sb.origin.x + x, sb.origin.y + y, sb.origin.z + z);
                    if (t) throw StructureError("overlapping sub-blocks in plan");
                    t = 1;
                }
        const Index3 o{sb.origin.x * b, sb.origin.y * b, sb.origin.z * b};
        for (std::size_t z = 0; z < cd.nz; ++z)
            for (std::size_t y = 0; y < cd.ny; ++y)
                for (std::size_t x = 0; x < cd.nx; ++x) {
                    level.values(o.x + x, o.y + y, o.z + z) = values[i](x, y, z);
                    level.occupancy(o.x + x, o.y + y, o.z + z) = 1;
                }
    }
    return level;
}

/// Serialized plan: u8 strategy, u32 count, per sub-block u32 origin x,y,z and
/// u16 shape sx,sy,sz.
inline void write_plan(ByteWriter& w, const PartitionPlan& plan) {
    w.u8(static_cast<std::uint8_t>(plan.strategy));
    w.u32(static_cast<std::uint32_t>(plan.blocks.size()));
    for (const auto& sb : plan.blocks) {
        w.u32(static_cast<std::uint32_t>(sb.origin.x));
        w.u32(static_cast<std::uint32_t>(sb.origin.y));
        w.u32(static_cast<std::uint32_t>(sb.origin.z));
        w.u16(static_cast<std::uint16_t>(sb.shape.nx));
        w.u16(static_cast<std::uint16_t>(sb.shape.ny));
        w.u16(static_cast<std::uint16_t>(sb.shape.nz));
    }
}

/// Reads the sub-block list following an already-consumed strategy byte.
inline PartitionPlan read_plan_body(ByteReader& r, Strategy s) {
    PartitionPlan plan;
    plan.strategy = s;
    const std::uint32_t n = r.u32();
    if (static_cast<std::size_t>(n) * 18 > r.remaining()) throw CorruptStream("plan truncated");
    plan.blocks.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        SubBlock sb;
        sb.origin = {r.u32(), r.u32(), r.u32()};
        sb.shape = {r.u16(), r.u16(), r.u16()};
        if (sb.shape.volume() == 0) throw CorruptStream("zero-volume sub-block");
        plan.blocks.push_back(sb);
    }
    return plan;
}

inline std::size_t plan_descriptor_bytes(const PartitionPlan& plan) {
    return 1 + 4 + 18 * plan.blocks.size();
}

/// NaST: one 1x1x1 sub-block per non-empty unit block, x-fastest order.
inline PartitionPlan nast_partition(const UnitBlockGrid& grid) {
    PartitionPlan plan;
    plan.strategy = Strategy::NaST;
    const Dims3& d = grid.dims();
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x)
                if (grid.flags(x, y, z)) plan.blocks.push_back({{x, y, z}, {1, 1, 1}});
    return plan;
}

}  // namespace tacplus

#endif  // TACPLUS_PARTITION_PLAN_HPP
