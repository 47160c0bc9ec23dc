#ifndef TACPLUS_AMR_MODEL_HPP
#define TACPLUS_AMR_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tacplus/common.hpp"

namespace tacplus {

/// One refinement tier of a tree-based AMR dataset.
///
/// Occupancy is stored per cell but must be block aligned: every b^3 unit block is
/// either fully occupied or fully empty. Unoccupied cells hold the sentinel 0; the
/// mask is authoritative.
struct AMRLevel {
    int level_index = 0;  // 0 = finest
    std::size_t unit_block_size = 16;
    Array3<double> values;
    Array3<std::uint8_t> occupancy;

    const Dims3& dims() const { return values.dims(); }

    Dims3 block_dims() const {
        const auto& d = dims();
        return {d.nx / unit_block_size, d.ny / unit_block_size, d.nz / unit_block_size};
    }

    bool operator==(const AMRLevel&) const = default;
};

struct AMRDataset {
    std::vector<AMRLevel> levels;  // fine -> coarse
    std::size_t refinement_ratio = 2;
    ValueType value_type = ValueType::F32;

    const Dims3& finest_dims() const { return levels.front().dims(); }
    bool operator==(const AMRDataset&) const = default;
};

/// Structure-only view of a dataset (dims, block sizes, masks), enough to rebuild
/// levels from a uniform grid or to validate a decoded archive against.
struct LevelGeometry {
    std::size_t unit_block_size = 16;
    Array3<std::uint8_t> occupancy;
    const Dims3& dims() const { return occupancy.dims(); }
    bool operator==(const LevelGeometry&) const = default;
};

struct DatasetGeometry {
    std::vector<LevelGeometry> levels;
    std::size_t refinement_ratio = 2;
    ValueType value_type = ValueType::F32;
    bool operator==(const DatasetGeometry&) const = default;
};

inline DatasetGeometry geometry_of(const AMRDataset& ds) {
    DatasetGeometry g;
    g.refinement_ratio = ds.refinement_ratio;
    g.value_type = ds.value_type;
    for (const auto& l : ds.levels) g.levels.push_back({l.unit_block_size, l.occupancy});
    return g;
}

/// Uniform finest-resolution grid with the source level of every cell.
struct UniformGrid {
    static constexpr std::uint8_t kNoOwner = 0xFF;
    Array3<double> values;
    Array3<std::uint8_t> provenance;
};

/// Up-sampled copy of one level; occupancy replicated alongside the values.
struct GridFragment {
    Array3<double> values;
    Array3<std::uint8_t> occupancy;
};

// ---------------------------------------------------------------------------
// Unit-block helpers

inline std::size_t ipow(std::size_t base, std::size_t exp) {
    std::size_t r = 1;
    while (exp-- > 0) r *= base;
    return r;
}

/// Per-unit-block occupancy read off the cell mask. Assumes block alignment
/// (checked by validate_level); samples the block's first cell.
inline Array3<std::uint8_t> block_flags(const Array3<std::uint8_t>& occupancy, std::size_t b) {
    const Dims3& d = occupancy.dims();
    Array3<std::uint8_t> flags(Dims3{d.nx / b, d.ny / b, d.nz / b});
    for (std::size_t z = 0; z < flags.dims().nz; ++z)
        for (std::size_t y = 0; y < flags.dims().ny; ++y)
            for (std::size_t x = 0; x < flags.dims().nx; ++x)
                flags(x, y, z) = occupancy(x * b, y * b, z * b) ? 1 : 0;
    return flags;
}

inline Array3<std::uint8_t> block_flags(const AMRLevel& level) {
    return block_flags(level.occupancy, level.unit_block_size);
}

/// Expand per-block flags to a per-cell mask.
inline Array3<std::uint8_t> expand_block_flags(const Array3<std::uint8_t>& flags, std::size_t b) {
    const Dims3& bd = flags.dims();
    Array3<std::uint8_t> mask(Dims3{bd.nx * b, bd.ny * b, bd.nz * b}, 0);
    for (std::size_t z = 0; z < mask.dims().nz; ++z)
        for (std::size_t y = 0; y < mask.dims().ny; ++y)
            for (std::size_t x = 0; x < mask.dims().nx; ++x)
                mask(x, y, z) = flags(x / b, y / b, z / b);
    return mask;
}

inline void validate_mask(const Array3<std::uint8_t>& occupancy, std::size_t b) {
    const Dims3& d = occupancy.dims();
    if (b == 0) throw StructureError("unit block size must be positive");
    if (d.nx % b != 0 || d.ny % b != 0 || d.nz % b != 0) {
        throw StructureError("level dims must be divisible by the unit block size");
    }
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                const bool head = occupancy(x - x % b, y - y % b, z - z % b) != 0;
                if ((occupancy(x, y, z) != 0) != head) {
                    throw StructureError("occupancy mask is not aligned to unit blocks");
                }
            }
}

inline void validate_level(const AMRLevel& level) {
    if (level.values.dims() != level.occupancy.dims()) {
        throw StructureError("values and occupancy dims differ");
    }
    validate_mask(level.occupancy, level.unit_block_size);
    for (std::size_t i = 0; i < level.values.size(); ++i) {
        if (!level.occupancy[i] && level.values[i] != 0.0) {
            throw StructureError("unoccupied cell holds a non-zero value");
        }
    }
}

/// Fraction of occupied unit blocks.
inline double density(const AMRLevel& level) {
    const auto flags = block_flags(level);
    if (flags.size() == 0) return 0.0;
    std::size_t n = 0;
    for (auto f : flags.vec()) n += f ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(flags.size());
}

// ---------------------------------------------------------------------------
// Resolution changes

/// Nearest-neighbor replication of every cell into rate^3 cells.
inline GridFragment upsample(const AMRLevel& level, std::size_t rate) {
    if (rate == 0) throw InvalidArgument("upsample rate must be >= 1");
    const Dims3& d = level.dims();
    const Dims3 od{d.nx * rate, d.ny * rate, d.nz * rate};
    GridFragment out{Array3<double>(od), Array3<std::uint8_t>(od)};
    for (std::size_t z = 0; z < od.nz; ++z)
        for (std::size_t y = 0; y < od.ny; ++y)
            for (std::size_t x = 0; x < od.nx; ++x) {
                out.values(x, y, z) = level.values(x / rate, y / rate, z / rate);
                out.occupancy(x, y, z) = level.occupancy(x / rate, y / rate, z / rate);
            }
    return out;
}

inline void validate_level_chain(const DatasetGeometry& g) {
    if (g.levels.empty()) throw StructureError("dataset has no levels");
    if (g.levels.size() > 254) throw StructureError("too many levels");
    if (g.refinement_ratio == 0) throw StructureError("refinement ratio must be positive");
    for (std::size_t l = 0; l + 1 < g.levels.size(); ++l) {
        const Dims3& fine = g.levels[l].dims();
        const Dims3& coarse = g.levels[l + 1].dims();
        const std::size_t r = g.refinement_ratio;
        if (coarse.nx * r != fine.nx || coarse.ny * r != fine.ny || coarse.nz * r != fine.nz) {
            throw StructureError("level " + std::to_string(l + 1) +
                                 " dims times refinement ratio do not match level " +
                                 std::to_string(l));
        }
    }
}

/// Owning level per finest cell. Throws if a cell is owned twice (patch-based
/// data) or by nobody.
inline Array3<std::uint8_t> ownership(const DatasetGeometry& g) {
    validate_level_chain(g);
    const Dims3 fd = g.levels.front().dims();
    Array3<std::uint8_t> owner(fd, UniformGrid::kNoOwner);
    for (std::size_t l = 0; l < g.levels.size(); ++l) {
        const std::size_t rate = ipow(g.refinement_ratio, l);
        const auto& occ = g.levels[l].occupancy;
        for (std::size_t z = 0; z < fd.nz; ++z)
            for (std::size_t y = 0; y < fd.ny; ++y)
                for (std::size_t x = 0; x < fd.nx; ++x) {
                    if (!occ(x / rate, y / rate, z / rate)) continue;
                    auto& o = owner(x, y, z);
                    if (o != UniformGrid::kNoOwner) {
                        throw StructureError(
                            "overlapping ownership between levels (patch-based AMR is not "
                            "supported; only tree-based data without redundant coarse copies)");
                    }
                    o = static_cast<std::uint8_t>(l);
                }
    }
    for (auto o : owner.vec()) {
        if (o == UniformGrid::kNoOwner) throw StructureError("cell not owned by any level");
    }
    return owner;
}

inline void validate_geometry(const DatasetGeometry& g) {
    for (const auto& l : g.levels) validate_mask(l.occupancy, l.unit_block_size);
    (void)ownership(g);
}

inline void validate_dataset(const AMRDataset& ds) {
    for (const auto& l : ds.levels) validate_level(l);
    (void)ownership(geometry_of(ds));
}

inline UniformGrid flatten_to_uniform(const AMRDataset& ds) {
    const auto owner = ownership(geometry_of(ds));
    const Dims3 fd = ds.finest_dims();
    UniformGrid g{Array3<double>(fd), owner};
    for (std::size_t z = 0; z < fd.nz; ++z)
        for (std::size_t y = 0; y < fd.ny; ++y)
            for (std::size_t x = 0; x < fd.nx; ++x) {
                const std::size_t l = owner(x, y, z);
                const std::size_t rate = ipow(ds.refinement_ratio, l);
                g.values(x, y, z) = ds.levels[l].values(x / rate, y / rate, z / rate);
            }
    return g;
}

/// Rebuild per-level arrays from a uniform grid. Coarse cells take the mean of
/// their rate^3 replicas, so a lossy grid whose replicas disagree still maps back
/// deterministically.
inline AMRDataset split_uniform(const UniformGrid& g, const DatasetGeometry& geo) {
    validate_level_chain(geo);
    if (g.values.dims() != geo.levels.front().dims()) {
        throw StructureError("uniform grid dims do not match finest level");
    }
    AMRDataset ds;
    ds.refinement_ratio = geo.refinement_ratio;
    ds.value_type = geo.value_type;
    for (std::size_t l = 0; l < geo.levels.size(); ++l) {
        const auto& lg = geo.levels[l];
        AMRLevel level;
        level.level_index = static_cast<int>(l);
        level.unit_block_size = lg.unit_block_size;
        level.occupancy = lg.occupancy;
        level.values = Array3<double>(lg.dims(), 0.0);
        const std::size_t rate = ipow(geo.refinement_ratio, l);
        const Dims3& d = lg.dims();
        for (std::size_t z = 0; z < d.nz; ++z)
            for (std::size_t y = 0; y < d.ny; ++y)
                for (std::size_t x = 0; x < d.nx; ++x) {
                    if (!lg.occupancy(x, y, z)) continue;
                    const double first = g.values(x * rate, y * rate, z * rate);
                    double sum = 0.0, lo = first, hi = first;
                    bool all_equal = true;
                    for (std::size_t k = 0; k < rate; ++k)
                        for (std::size_t j = 0; j < rate; ++j)
                            for (std::size_t i = 0; i < rate; ++i) {
                                const double v =
                                    g.values(x * rate + i, y * rate + j, z * rate + k);
                                sum += v;
                                lo = std::min(lo, v);
                                hi = std::max(hi, v);
                                all_equal = all_equal && v == first;
                            }
                    const double mean =
                        all_equal ? first : std::clamp(sum / static_cast<double>(rate * rate * rate), lo, hi);
                    level.values(x, y, z) = round_to(geo.value_type, mean);
                }
        ds.levels.push_back(std::move(level));
    }
    return ds;
}

/// max - min over every occupied cell of every level; 0 if nothing is occupied.
inline double global_range(const AMRDataset& ds) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& l : ds.levels)
        for (std::size_t i = 0; i < l.values.size(); ++i)
            if (l.occupancy[i]) {
                lo = std::min(lo, l.values[i]);
                hi = std::max(hi, l.values[i]);
            }
    return hi >= lo ? hi - lo : 0.0;
}

inline std::size_t stored_point_count(const AMRDataset& ds) {
    std::size_t n = 0;
    for (const auto& l : ds.levels)
        for (auto o : l.occupancy.vec()) n += o ? 1 : 0;
    return n;
}

// ---------------------------------------------------------------------------
// AMRC container (little-endian)
//
//   "AMRC" u16 version=1 u8 value_type u8 num_levels u16 refinement_ratio
//   per level: u32 nx ny nz, u32 unit_block_size, occupancy bitmap (1 bit per unit
//   block, x-fastest, byte padded), raw values x-fastest (all cells).

inline constexpr std::uint16_t kAmrcVersion = 1;

inline void write_geometry_header(ByteWriter& w, const DatasetGeometry& g) {
    w.u8(static_cast<std::uint8_t>(g.value_type));
    w.u8(static_cast<std::uint8_t>(g.levels.size()));
    w.u16(static_cast<std::uint16_t>(g.refinement_ratio));
}

inline std::vector<std::uint8_t> write_amrc(const AMRDataset& ds) {
    validate_dataset(ds);
    ByteWriter w;
    w.magic("AMRC");
    w.u16(kAmrcVersion);
    write_geometry_header(w, geometry_of(ds));
    for (const auto& l : ds.levels) {
        const Dims3& d = l.dims();
        w.u32(static_cast<std::uint32_t>(d.nx));
        w.u32(static_cast<std::uint32_t>(d.ny));
        w.u32(static_cast<std::uint32_t>(d.nz));
        w.u32(static_cast<std::uint32_t>(l.unit_block_size));
        const auto flags = block_flags(l);
        w.bytes(pack_bits(flags.span()));
        for (double v : l.values.vec()) w.value(ds.value_type, v);
    }
    return w.take();
}

inline AMRDataset read_amrc(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_magic("AMRC");
    if (r.u16() != kAmrcVersion) throw CorruptStream("unsupported AMRC version");
    AMRDataset ds;
    const std::uint8_t vt = r.u8();
    if (vt > 1) throw CorruptStream("unknown value type");
    ds.value_type = static_cast<ValueType>(vt);
    const std::size_t num_levels = r.u8();
    ds.refinement_ratio = r.u16();
    if (num_levels == 0) throw StructureError("AMRC file has no levels");
    for (std::size_t li = 0; li < num_levels; ++li) {
        AMRLevel l;
        l.level_index = static_cast<int>(li);
        Dims3 d{r.u32(), r.u32(), r.u32()};
        l.unit_block_size = r.u32();
        if (l.unit_block_size == 0 || d.nx % l.unit_block_size || d.ny % l.unit_block_size ||
            d.nz % l.unit_block_size) {
            throw StructureError("level dims not divisible by unit block size");
        }
        const std::size_t b = l.unit_block_size;
        const Dims3 bd{d.nx / b, d.ny / b, d.nz / b};
        const auto flag_bytes = r.bytes((bd.volume() + 7) / 8);
        Array3<std::uint8_t> flags(bd, unpack_bits(flag_bytes, bd.volume()));
        l.occupancy = expand_block_flags(flags, b);
        l.values = Array3<double>(d);
        if (r.remaining() / value_bytes(ds.value_type) < d.volume()) {
            throw CorruptStream("AMRC value section truncated");
        }
        for (auto& v : l.values.vec()) v = r.value(ds.value_type);
        ds.levels.push_back(std::move(l));
    }
    if (!r.at_end()) throw CorruptStream("trailing bytes after AMRC payload");
    validate_dataset(ds);
    return ds;
}

}  // namespace tacplus

#endif  // TACPLUS_AMR_MODEL_HPP
