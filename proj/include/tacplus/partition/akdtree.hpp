#ifndef TACPLUS_PARTITION_AKDTREE_HPP
#define TACPLUS_PARTITION_AKDTREE_HPP

#include <array>
#include <cstdint>
#include <cstdlib>
#include <vector>

#include "tacplus/partition/plan.hpp"

namespace tacplus {

enum class KDKind : std::uint8_t { Cube, Flat, Slim };

/// Octant index of a cube: bx + 2*by + 4*bz, where a bit is 1 for the upper half
/// of that axis.
using OctantCounts = std::array<std::size_t, 8>;

struct KDNode {
    Index3 origin;  // unit blocks, in the power-of-two padded space
    Dims3 shape;
    std::size_t count = 0;  // non-empty unit blocks inside the box
    KDKind kind = KDKind::Cube;
    int split_axis = -1;    // -1 for leaves
    bool counted = false;   // cube node that ran an octant-counting pass
    OctantCounts octants{}; // valid when counted
    int left = -1, right = -1;

    bool is_leaf() const { return left < 0; }
};

struct KDTree {
    std::vector<KDNode> nodes;  // nodes[0] is the root
    std::size_t padded_side = 0;
    std::size_t counting_passes = 0;

    std::size_t cube_nodes() const {
        std::size_t n = 0;
        for (const auto& nd : nodes) n += nd.kind == KDKind::Cube ? 1 : 0;
        return n;
    }
};

/// |lower half - upper half| along each axis, from the 8 octant counts of a cube.
inline std::array<long long, 3> octant_diffs(const OctantCounts& c) {
    std::array<long long, 3> diff{};
    for (int axis = 0; axis < 3; ++axis) {
        long long lo = 0, hi = 0;
        for (int i = 0; i < 8; ++i) {
            ((i >> axis) & 1 ? hi : lo) += static_cast<long long>(c[i]);
        }
        diff[axis] = std::llabs(lo - hi);
    }
    return diff;
}

/// Argmax over the allowed axes; ties go to x, then y, then z.
inline int max_diff_axis(const std::array<long long, 3>& diff, std::array<bool, 3> allowed = {true, true, true}) {
    int best = -1;
    for (int a = 0; a < 3; ++a) {
        if (!allowed[a]) continue;
        if (best < 0 || diff[a] > diff[best]) best = a;
    }
    return best;
}

struct AKDTreeResult {
    PartitionPlan plan;
    KDTree tree;
};

namespace detail {

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

class AKDTreeBuilder {
public:
    explicit AKDTreeBuilder(const Array3<std::uint8_t>& flags) : flags_(flags) {
        const Dims3& d = flags.dims();
        tree_.padded_side = next_pow2(std::max({d.nx, d.ny, d.nz, std::size_t{1}}));
    }

    AKDTreeResult run() {
        const std::size_t p = tree_.padded_side;
        const Dims3& d = flags_.dims();
        std::size_t root_count = 0;
        if (d.volume() > 0) {
            if (p >= 2) {
                const auto oct = count_octants({0, 0, 0}, p);
                for (auto c : oct) root_count += c;
                build_cube({0, 0, 0}, p, root_count, &oct);
            } else {
                root_count = flags_(0, 0, 0) ? 1 : 0;
                build_cube({0, 0, 0}, p, root_count, nullptr);
            }
        }
        AKDTreeResult res;
        res.plan.strategy = Strategy::AKDTree;
        res.plan.blocks = std::move(leaves_);
        res.tree = std::move(tree_);
        return res;
    }

private:
    // One entry per cube octant still inside the current flat/slim node.
    struct Part {
        int octant;
        std::size_t count;
    };

    bool in_grid(std::size_t x, std::size_t y, std::size_t z) const {
        const Dims3& d = flags_.dims();
        return x < d.nx && y < d.ny && z < d.nz;
    }

    OctantCounts count_octants(const Index3& o, std::size_t side) {
        ++tree_.counting_passes;
        OctantCounts c{};
        const std::size_t h = side / 2;
        const Dims3& d = flags_.dims();
        const std::size_t x1 = std::min(d.nx, o.x + side);
        const std::size_t y1 = std::min(d.ny, o.y + side);
        const std::size_t z1 = std::min(d.nz, o.z + side);
        for (std::size_t z = o.z; z < z1; ++z)
            for (std::size_t y = o.y; y < y1; ++y)
                for (std::size_t x = o.x; x < x1; ++x) {
                    if (!flags_(x, y, z)) continue;
                    const int i = (x - o.x >= h ? 1 : 0) + (y - o.y >= h ? 2 : 0) + (z - o.z >= h ? 4 : 0);
                    ++c[i];
                }
        return c;
    }

    int add_node(const Index3& o, const Dims3& shape, std::size_t count, KDKind kind) {
        KDNode n;
        n.origin = o;
        n.shape = shape;
        n.count = count;
        n.kind = kind;
        tree_.nodes.push_back(n);
        return static_cast<int>(tree_.nodes.size() - 1);
    }

    // Leaf test shared by all node kinds; records full leaves as sub-blocks.
    bool settle_leaf(int id) {
        const KDNode& n = tree_.nodes[id];
        if (n.count == 0) return true;
        if (n.count == n.shape.volume()) {
            leaves_.push_back({n.origin, n.shape});
            return true;
        }
        return false;
    }

    int build_cube(const Index3& o, std::size_t side, std::size_t count, const OctantCounts* pre) {
        const int id = add_node(o, {side, side, side}, count, KDKind::Cube);
        if (settle_leaf(id)) {
            if (pre) {
                tree_.nodes[id].counted = true;
                tree_.nodes[id].octants = *pre;
            }
            return id;
        }
        const OctantCounts oct = pre ? *pre : count_octants(o, side);
        const int axis = max_diff_axis(octant_diffs(oct));
        const std::size_t h = side / 2;
        std::vector<Part> lo, hi;
        for (int i = 0; i < 8; ++i) ((i >> axis) & 1 ? hi : lo).push_back({i, oct[i]});
        Dims3 half{side, side, side};
        half[axis] = h;
        Index3 o_hi = o;
        o_hi[axis] += h;
        const int l = build_flat(o, half, lo, side);
        const int r = build_flat(o_hi, half, hi, side);
        KDNode& n = tree_.nodes[id];
        n.counted = true;
        n.octants = oct;
        n.split_axis = axis;
        n.left = l;
        n.right = r;
        return id;
    }

    static std::size_t sum(const std::vector<Part>& parts) {
        std::size_t s = 0;
        for (const auto& p : parts) s += p.count;
        return s;
    }

    int build_flat(const Index3& o, const Dims3& shape, const std::vector<Part>& parts,
                   std::size_t cube_side) {
        const int id = add_node(o, shape, sum(parts), KDKind::Flat);
        if (settle_leaf(id)) return id;
        std::array<bool, 3> allowed{};
        for (int a = 0; a < 3; ++a) allowed[a] = shape[a] == cube_side;
        std::array<long long, 3> diff{};
        for (int a = 0; a < 3; ++a) {
            if (!allowed[a]) continue;
            long long lo = 0, hi = 0;
            for (const auto& p : parts) ((p.octant >> a) & 1 ? hi : lo) += static_cast<long long>(p.count);
            diff[a] = std::llabs(lo - hi);
        }
        const int axis = max_diff_axis(diff, allowed);
        const std::size_t h = cube_side / 2;
        std::vector<Part> lo, hi;
        for (const auto& p : parts) ((p.octant >> axis) & 1 ? hi : lo).push_back(p);
        Dims3 half = shape;
        half[axis] = h;
        Index3 o_hi = o;
        o_hi[axis] += h;
        const int l = build_slim(o, half, lo, cube_side);
        const int r = build_slim(o_hi, half, hi, cube_side);
        KDNode& n = tree_.nodes[id];
        n.split_axis = axis;
        n.left = l;
        n.right = r;
        return id;
    }

    int build_slim(const Index3& o, const Dims3& shape, const std::vector<Part>& parts,
                   std::size_t cube_side) {
        const int id = add_node(o, shape, sum(parts), KDKind::Slim);
        if (settle_leaf(id)) return id;
        int axis = 0;
        for (int a = 0; a < 3; ++a)
            if (shape[a] == cube_side) axis = a;
        const std::size_t h = cube_side / 2;
        const Part* lo = nullptr;
        const Part* hi = nullptr;
        for (const auto& p : parts) ((p.octant >> axis) & 1 ? hi : lo) = &p;
        Index3 o_hi = o;
        o_hi[axis] += h;
        const int l = build_cube(o, h, lo->count, nullptr);
        const int r = build_cube(o_hi, h, hi->count, nullptr);
        KDNode& n = tree_.nodes[id];
        n.split_axis = axis;
        n.left = l;
        n.right = r;
        return id;
    }

    const Array3<std::uint8_t>& flags_;
    KDTree tree_;
    std::vector<SubBlock> leaves_;
};

}  // namespace detail

/// Adaptive k-d tree partition. The grid is treated as embedded in the smallest
/// power-of-two cube, padded with virtual empty blocks. Cube nodes count their
/// eight octants and split across the axis of largest imbalance into two flat
/// nodes; flat nodes reuse their four inherited counts to split into slim nodes;
/// slim nodes split along their long axis into two cubes. Splitting stops at
/// empty or full nodes; full leaves are emitted left before right.
inline AKDTreeResult akdtree_partition(const UnitBlockGrid& grid) {
    return detail::AKDTreeBuilder(grid.flags).run();
}

}  // namespace tacplus

#endif  // TACPLUS_PARTITION_AKDTREE_HPP
