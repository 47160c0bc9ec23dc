#ifndef TACPLUS_PARTITION_GSP_HPP
#define TACPLUS_PARTITION_GSP_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "tacplus/partition/plan.hpp"

namespace tacplus {

/// What ghost-shell padding touched, enough to undo it.
struct GspMetadata {
    std::size_t x_layers = 1;
    std::size_t y_slices = 1;
    std::vector<Index3> padded_blocks;  // unit-block coords, x-fastest order

    bool operator==(const GspMetadata&) const = default;
};

struct GspResult {
    Array3<double> values;
    GspMetadata metadata;
};

/// Ghost-shell padding.
///
/// Every empty unit block with at least one non-empty face neighbor receives, for
/// each such neighbor, an `x_layers`-deep slab on the shared face filled with the
/// mean of the neighbor's `y_slices` slices nearest that face. Cells covered by k
/// slabs take the sum of each slab value divided by k (k = 2 on edges, 3 at
/// corners). Occupied cells and unreached empty cells are left as they are.
inline GspResult gsp_pad(const AMRLevel& level, std::size_t x_layers = 1, std::size_t y_slices = 1) {
    const std::size_t b = level.unit_block_size;
    if (x_layers == 0 || x_layers > b) throw InvalidArgument("gsp x_layers must be in [1, b]");
    if (y_slices == 0 || y_slices > b) throw InvalidArgument("gsp y_slices must be in [1, b]");
    validate_mask(level.occupancy, b);

    const auto flags = block_flags(level);
    const Dims3& bd = flags.dims();
    GspResult res{level.values, {x_layers, y_slices, {}}};

    std::vector<double> sum(b * b * b);
    std::vector<std::uint8_t> hits(b * b * b);
    auto local = [b](std::size_t x, std::size_t y, std::size_t z) { return x + b * (y + b * z); };

    for (std::size_t bz = 0; bz < bd.nz; ++bz)
        for (std::size_t by = 0; by < bd.ny; ++by)
            for (std::size_t bx = 0; bx < bd.nx; ++bx) {
                if (flags(bx, by, bz)) continue;
                std::fill(sum.begin(), sum.end(), 0.0);
                std::fill(hits.begin(), hits.end(), 0);
                bool any = false;
                const Index3 blk{bx, by, bz};
                for (int axis = 0; axis < 3; ++axis) {
                    for (int dir : {-1, +1}) {
                        Index3 nb = blk;
                        if (dir < 0) {
                            if (blk[axis] == 0) continue;
                            nb[axis] -= 1;
                        } else {
                            if (blk[axis] + 1 >= bd[axis]) continue;
                            nb[axis] += 1;
                        }
                        if (!flags(nb.x, nb.y, nb.z)) continue;
                        any = true;
                        // Mean of the neighbor's y_slices slices next to the shared face.
                        double acc = 0.0;
                        std::size_t n = 0;
                        for (std::size_t k = 0; k < b; ++k)
                            for (std::size_t j = 0; j < b; ++j)
                                for (std::size_t i = 0; i < b; ++i) {
                                    std::array<std::size_t, 3> c{i, j, k};
                                    const std::size_t depth = dir > 0 ? c[axis] : b - 1 - c[axis];
                                    if (depth >= y_slices) continue;
                                    acc += level.values(nb.x * b + i, nb.y * b + j, nb.z * b + k);
                                    ++n;
                                }
                        const double pad = acc / static_cast<double>(n);
                        for (std::size_t k = 0; k < b; ++k)
                            for (std::size_t j = 0; j < b; ++j)
                                for (std::size_t i = 0; i < b; ++i) {
                                    std::array<std::size_t, 3> c{i, j, k};
                                    const std::size_t depth = dir > 0 ? b - 1 - c[axis] : c[axis];
                                    if (depth >= x_layers) continue;
                                    sum[local(i, j, k)] += pad;
                                    ++hits[local(i, j, k)];
                                }
                    }
                }
                if (!any) continue;
                res.metadata.padded_blocks.push_back(blk);
                for (std::size_t k = 0; k < b; ++k)
                    for (std::size_t j = 0; j < b; ++j)
                        for (std::size_t i = 0; i < b; ++i) {
                            const auto h = hits[local(i, j, k)];
                            if (h == 0) continue;
                            res.values(bx * b + i, by * b + j, bz * b + k) = sum[local(i, j, k)] / h;
                        }
            }
    return res;
}

/// Undo padding: padded blocks must be empty in the mask. Every unoccupied cell
/// is reset to the sentinel 0 (the mask is authoritative, so this also clears
/// lossy noise in unpadded empty blocks).
inline AMRLevel gsp_unpad(const Array3<double>& padded, const GspMetadata& meta,
                          const Array3<std::uint8_t>& occupancy, std::size_t b, int level_index = 0) {
    if (padded.dims() != occupancy.dims()) throw StructureError("padded values and mask dims differ");
    validate_mask(occupancy, b);
    const auto flags = block_flags(occupancy, b);
    for (const auto& p : meta.padded_blocks) {
        if (p.x >= flags.dims().nx || p.y >= flags.dims().ny || p.z >= flags.dims().nz) {
            throw StructureError("padded block outside the level");
        }
        if (flags(p.x, p.y, p.z)) throw StructureError("padded block is occupied in the mask");
    }
    AMRLevel level;
    level.level_index = level_index;
    level.unit_block_size = b;
    level.occupancy = occupancy;
    level.values = padded;
    for (std::size_t i = 0; i < level.values.size(); ++i) {
        if (!occupancy[i]) level.values[i] = 0.0;
    }
    return level;
}

}  // namespace tacplus

#endif  // TACPLUS_PARTITION_GSP_HPP
