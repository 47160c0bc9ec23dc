#ifndef TACPLUS_PARTITION_OPST_HPP
#define TACPLUS_PARTITION_OPST_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#include "tacplus/partition/plan.hpp"

namespace tacplus {

/// Side length of the largest fully occupied cube of unit blocks whose maximal
/// corner is each block. 0 for empty blocks.
struct BSField {
    Array3<std::int32_t> bs;
    std::int32_t max_side = 0;

    const Dims3& dims() const { return bs.dims(); }
};

namespace detail {

inline std::int32_t bs_recurrence(const Array3<std::uint8_t>& flags, const Array3<std::int32_t>& bs,
                                  std::size_t x, std::size_t y, std::size_t z) {
    if (!flags(x, y, z)) return 0;
    if (x == 0 || y == 0 || z == 0) return 1;
    const std::int32_t m = std::min({bs(x - 1, y, z), bs(x, y - 1, z), bs(x, y, z - 1),
                                     bs(x - 1, y - 1, z), bs(x, y - 1, z - 1),
                                     bs(x - 1, y, z - 1), bs(x - 1, y - 1, z - 1)});
    return m + 1;
}

}  // namespace detail

inline BSField opst_bs_init(const Array3<std::uint8_t>& flags) {
    BSField f{Array3<std::int32_t>(flags.dims(), 0), 0};
    const Dims3& d = flags.dims();
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                const auto v = detail::bs_recurrence(flags, f.bs, x, y, z);
                f.bs(x, y, z) = v;
                f.max_side = std::max(f.max_side, v);
            }
    return f;
}

inline BSField opst_bs_init(const UnitBlockGrid& grid) { return opst_bs_init(grid.flags); }

/// Partial recomputation after a cube has been cleared from `flags` (and zeroed
/// in `field`). Only blocks in [origin, origin + side + max_side) can depend on
/// the cleared cube, since a BS value never exceeds max_side and dependencies
/// only point toward smaller indices.
inline void opst_update_bs(BSField& field, const Array3<std::uint8_t>& flags, const Index3& origin,
                           std::size_t side, std::int32_t max_side) {
    const Dims3& d = field.dims();
    const std::size_t reach = side + static_cast<std::size_t>(std::max(max_side, 0));
    const std::size_t x1 = std::min(d.nx, origin.x + reach);
    const std::size_t y1 = std::min(d.ny, origin.y + reach);
    const std::size_t z1 = std::min(d.nz, origin.z + reach);
    for (std::size_t z = origin.z; z < z1; ++z)
        for (std::size_t y = origin.y; y < y1; ++y)
            for (std::size_t x = origin.x; x < x1; ++x)
                field.bs(x, y, z) = detail::bs_recurrence(flags, field.bs, x, y, z);
}

/// Observer invoked after every extraction + partial update, with the current
/// mask and BS field. Used by tests to check the update against a full rebuild.
using OpstObserver =
    std::function<void(const Array3<std::uint8_t>& flags, const BSField& field, const SubBlock&)>;

/// Greedy max-cube extraction. Blocks are visited in strictly descending
/// lexicographic order (z outer, then y, then x); wherever BS = s >= 1 the s^3
/// cube ending there is emitted, cleared, and BS is patched locally. The final
/// plan is stably grouped by cube side, largest first.
inline PartitionPlan opst_partition(const UnitBlockGrid& grid, const OpstObserver& observer = {}) {
    Array3<std::uint8_t> flags = grid.flags;
    BSField field = opst_bs_init(flags);
    const std::int32_t max_side = field.max_side;
    const Dims3& d = flags.dims();

    PartitionPlan plan;
    plan.strategy = Strategy::OpST;
    for (std::size_t z = d.nz; z-- > 0;)
        for (std::size_t y = d.ny; y-- > 0;)
            for (std::size_t x = d.nx; x-- > 0;) {
                const std::int32_t s = field.bs(x, y, z);
                if (s < 1) continue;
                const std::size_t side = static_cast<std::size_t>(s);
                const Index3 o{x + 1 - side, y + 1 - side, z + 1 - side};
                for (std::size_t k = 0; k < side; ++k)
                    for (std::size_t j = 0; j < side; ++j)
                        for (std::size_t i = 0; i < side; ++i) {
                            flags(o.x + i, o.y + j, o.z + k) = 0;
                            field.bs(o.x + i, o.y + j, o.z + k) = 0;
                        }
                const SubBlock sb{o, {side, side, side}};
                plan.blocks.push_back(sb);
                opst_update_bs(field, flags, o, side, max_side);
                if (observer) observer(flags, field, sb);
            }
    std::stable_sort(plan.blocks.begin(), plan.blocks.end(),
                     [](const SubBlock& a, const SubBlock& b) { return a.shape.nx > b.shape.nx; });
    return plan;
}

}  // namespace tacplus

#endif  // TACPLUS_PARTITION_OPST_HPP
