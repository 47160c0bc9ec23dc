#ifndef TACPLUS_PIPELINE_HPP
#define TACPLUS_PIPELINE_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tacplus/amr_model.hpp"
#include "tacplus/codec.hpp"
#include "tacplus/common.hpp"
#include "tacplus/partition.hpp"

namespace tacplus {

/// End-to-end compression method. Values are the on-disk tags.
enum class Method : std::uint8_t {
    TacPlus = 0,     // OpST+/AKDTree+ by density, shared Huffman table
    Tac = 1,         // same partitions, merged-mode codec
    NaST = 2,        // unit-block sparse tensor, merged-mode codec
    GSP = 3,         // ghost-shell padded full level grid
    ZeroFill = 4,    // full level grid with sentinel zeros
    Baseline1D = 5,  // occupied values as one 1D stream per level
    Baseline3D = 6,  // all levels up-sampled to one uniform grid
};

inline const char* method_name(Method m) {
    switch (m) {
        case Method::TacPlus: return "tac+";
        case Method::Tac: return "tac";
        case Method::NaST: return "nast";
        case Method::GSP: return "gsp";
        case Method::ZeroFill: return "zf";
        case Method::Baseline1D: return "1d";
        case Method::Baseline3D: return "3d";
    }
    return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
    for (auto m : {Method::TacPlus, Method::Tac, Method::NaST, Method::GSP, Method::ZeroFill,
                   Method::Baseline1D, Method::Baseline3D}) {
        if (s == method_name(m)) return m;
    }
    return std::nullopt;
}

/// How the finest-level bound is spread over coarser levels.
struct EbAllocation {
    enum class Kind { Uniform, Ideal, PerGap, Explicit };
    Kind kind = Kind::Uniform;
    double gap_ratio = 1.0;      // PerGap: fine:coarse ratio applied at every level gap
    std::vector<double> ratios;  // Explicit: one entry per level, fine first

    static EbAllocation uniform() { return {}; }
    static EbAllocation ideal() { return {Kind::Ideal, 1.0, {}}; }
    static EbAllocation per_gap(double k) { return {Kind::PerGap, k, {}}; }
    static EbAllocation explicit_ratios(std::vector<double> r) { return {Kind::Explicit, 1.0, std::move(r)}; }
    /// Tuned presets: 3:1 for spectral fidelity, 2:1 for halo statistics.
    static EbAllocation preset_3to1() { return per_gap(3.0); }
    static EbAllocation preset_2to1() { return per_gap(2.0); }
};

/// Per-level absolute bounds, finest first.
///
/// Uniform: every level gets `base`. Ideal: level l gets base / r^(3l), matching
/// the r^3 replication a coarse cell undergoes when up-sampled. PerGap(k): base /
/// k^l. Explicit ratios a:b:c: level l gets base * ratio[l] / ratio[0].
inline std::vector<double> allocate_error_bounds(double base, std::size_t num_levels,
                                                 std::size_t refinement_ratio,
                                                 const EbAllocation& alloc = {}) {
    if (!(base > 0.0)) throw InvalidArgument("base error bound must be positive");
    if (num_levels == 0) throw InvalidArgument("num_levels must be positive");
    std::vector<double> eb(num_levels, base);
    switch (alloc.kind) {
        case EbAllocation::Kind::Uniform:
            break;
        case EbAllocation::Kind::Ideal: {
            if (refinement_ratio == 0) throw InvalidArgument("refinement ratio must be positive");
            const double gap = std::pow(static_cast<double>(refinement_ratio), 3.0);
            for (std::size_t l = 0; l < num_levels; ++l) eb[l] = base / std::pow(gap, static_cast<double>(l));
            break;
        }
        case EbAllocation::Kind::PerGap:
            if (!(alloc.gap_ratio > 0.0)) throw InvalidArgument("error-bound ratios must be positive");
            for (std::size_t l = 0; l < num_levels; ++l) {
                eb[l] = base / std::pow(alloc.gap_ratio, static_cast<double>(l));
            }
            break;
        case EbAllocation::Kind::Explicit:
            if (alloc.ratios.size() != num_levels) {
                throw InvalidArgument("need one error-bound ratio per level");
            }
            for (double r : alloc.ratios)
                if (!(r > 0.0)) throw InvalidArgument("error-bound ratios must be positive");
            for (std::size_t l = 0; l < num_levels; ++l) eb[l] = base * alloc.ratios[l] / alloc.ratios[0];
            break;
    }
    return eb;
}

/// Hybrid rule: OpST+ below the density threshold, AKDTree+ at or above it.
inline Strategy select_strategy(double density, double threshold = 0.5) {
    if (!(density >= 0.0 && density <= 1.0)) throw InvalidArgument("density must lie in [0, 1]");
    if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("threshold must lie in (0, 1)");
    return density < threshold ? Strategy::OpST : Strategy::AKDTree;
}

struct CompressConfig {
    Method method = Method::TacPlus;
    ErrorBound eb{EbMode::Rel, 1e-3};
    EbAllocation allocation;
    double threshold = 0.5;
    std::size_t block_size = 0;  // 0: use each level's own unit block size
    bool deflate = true;
    std::size_t gsp_x_layers = 1;
    std::size_t gsp_y_slices = 1;
    unsigned threads = 0;  // 0: TACPLUS_THREADS or hardware concurrency
    std::optional<CodecMode> codec_mode;  // overrides the method's entropy mode
};

/// One level of an archive.
struct LevelRecord {
    Strategy strategy = Strategy::OpST;
    Dims3 dims;
    std::size_t unit_block_size = 16;
    PartitionPlan plan;                // sub-block strategies
    Array3<std::uint8_t> block_mask;   // bitmap strategies
    std::size_t gsp_x_layers = 1, gsp_y_slices = 1;
    std::optional<CompressedBlockSet> stream;
    bool deflate = true;
};

struct Archive {
    Method method = Method::TacPlus;
    ValueType value_type = ValueType::F32;
    std::size_t refinement_ratio = 2;
    std::vector<LevelRecord> levels;
};

namespace detail {

inline unsigned worker_count(unsigned requested, std::size_t jobs) {
    unsigned n = requested;
    if (n == 0) {
        if (const char* env = std::getenv("TACPLUS_THREADS")) n = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

/// Run fn(i) for i in [0, n) on up to `threads` workers; rethrows the first
/// failure by index.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    const unsigned workers = worker_count(threads, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline AMRLevel with_block_size(const AMRLevel& level, std::size_t b) {
    if (b == 0 || b == level.unit_block_size) return level;
    AMRLevel out = level;
    out.unit_block_size = b;
    validate_mask(out.occupancy, b);
    return out;
}

inline std::vector<double> occupied_values(const AMRLevel& level) {
    std::vector<double> v;
    for (std::size_t i = 0; i < level.values.size(); ++i)
        if (level.occupancy[i]) v.push_back(level.values[i]);
    return v;
}

inline bool any_occupied(const AMRLevel& level) {
    return std::any_of(level.occupancy.vec().begin(), level.occupancy.vec().end(),
                       [](std::uint8_t o) { return o != 0; });
}

}  // namespace detail

/// Compress one level with an explicit strategy and entropy mode.
inline LevelRecord encode_level(const AMRLevel& input, Strategy strategy, CodecMode mode, double eb_abs,
                                ValueType vt, const CompressConfig& cfg = {}) {
    const AMRLevel level = detail::with_block_size(input, cfg.block_size);
    validate_level(level);
    LevelRecord rec;
    rec.strategy = strategy;
    rec.dims = level.dims();
    rec.unit_block_size = level.unit_block_size;
    rec.deflate = cfg.deflate;
    const bool occupied = detail::any_occupied(level);

    std::vector<Array3<double>> blocks;
    switch (strategy) {
        case Strategy::NaST:
        case Strategy::OpST:
        case Strategy::AKDTree: {
            const auto grid = make_unit_block_grid(level);
            rec.plan = strategy == Strategy::NaST   ? nast_partition(grid)
                       : strategy == Strategy::OpST ? opst_partition(grid)
                                                    : akdtree_partition(grid).plan;
            blocks = extract_subblocks(level, rec.plan);
            break;
        }
        case Strategy::GSP: {
            rec.block_mask = block_flags(level);
            rec.gsp_x_layers = cfg.gsp_x_layers;
            rec.gsp_y_slices = cfg.gsp_y_slices;
            if (occupied) blocks.push_back(gsp_pad(level, cfg.gsp_x_layers, cfg.gsp_y_slices).values);
            break;
        }
        case Strategy::ZeroFill:
            rec.block_mask = block_flags(level);
            if (occupied) blocks.push_back(level.values);
            break;
        case Strategy::Linear1D: {
            rec.block_mask = block_flags(level);
            auto v = detail::occupied_values(level);
            if (!v.empty()) {
                const std::size_t n = v.size();
                blocks.emplace_back(Dims3{n, 1, 1}, std::move(v));
            }
            break;
        }
        case Strategy::Uniform3D:
            throw InvalidArgument("uniform 3D baseline is encoded per dataset, not per level");
    }
    if (!blocks.empty()) rec.stream = compress_blocks(mode, blocks, eb_abs, vt);
    return rec;
}

inline std::vector<Dims3> expected_block_dims(const LevelRecord& rec) {
    const std::size_t b = rec.unit_block_size;
    std::vector<Dims3> dims;
    switch (rec.strategy) {
        case Strategy::NaST:
        case Strategy::OpST:
        case Strategy::AKDTree:
            for (const auto& sb : rec.plan.blocks) dims.push_back({sb.shape.nx * b, sb.shape.ny * b, sb.shape.nz * b});
            break;
        case Strategy::GSP:
        case Strategy::ZeroFill:
            dims.push_back(rec.dims);
            break;
        case Strategy::Linear1D: {
            std::size_t n = 0;
            for (auto f : rec.block_mask.vec()) n += f ? b * b * b : 0;
            dims.push_back({n, 1, 1});
            break;
        }
        case Strategy::Uniform3D:
            dims.push_back(rec.dims);
            break;
    }
    return dims;
}

inline AMRLevel decode_level(const LevelRecord& rec, int level_index) {
    const std::size_t b = rec.unit_block_size;
    std::vector<Array3<double>> blocks;
    if (rec.stream) blocks = decompress_blocks(*rec.stream);
    switch (rec.strategy) {
        case Strategy::NaST:
        case Strategy::OpST:
        case Strategy::AKDTree: {
            if (!rec.stream) {
                if (!rec.plan.blocks.empty()) throw CorruptStream("plan has sub-blocks but no stream");
                blocks.clear();
            }
            return reassemble(rec.plan, blocks, rec.dims, b, level_index);
        }
        case Strategy::GSP:
        case Strategy::ZeroFill: {
            const auto mask = expand_block_flags(rec.block_mask, b);
            if (!rec.stream) {
                AMRLevel l{level_index, b, Array3<double>(rec.dims, 0.0), mask};
                return l;
            }
            GspMetadata meta{rec.gsp_x_layers, rec.gsp_y_slices, {}};
            return gsp_unpad(blocks.front(), meta, mask, b, level_index);
        }
        case Strategy::Linear1D: {
            AMRLevel l{level_index, b, Array3<double>(rec.dims, 0.0), expand_block_flags(rec.block_mask, b)};
            if (rec.stream) {
                const auto& v = blocks.front().vec();
                std::size_t k = 0;
                for (std::size_t i = 0; i < l.values.size(); ++i)
                    if (l.occupancy[i]) l.values[i] = v.at(k++);
                if (k != v.size()) throw CorruptStream("1D stream length does not match mask");
            }
            return l;
        }
        case Strategy::Uniform3D:
            break;
    }
    throw InvalidArgument("uniform 3D levels are decoded per dataset");
}

/// Strategy and codec mode a method uses for a level of the given density.
inline std::pair<Strategy, CodecMode> method_plan(Method m, double density, double threshold) {
    switch (m) {
        case Method::TacPlus: return {select_strategy(density, threshold), CodecMode::Shared};
        case Method::Tac: return {select_strategy(density, threshold), CodecMode::Merged};
        case Method::NaST: return {Strategy::NaST, CodecMode::Merged};
        case Method::GSP: return {Strategy::GSP, CodecMode::Shared};
        case Method::ZeroFill: return {Strategy::ZeroFill, CodecMode::Shared};
        case Method::Baseline1D: return {Strategy::Linear1D, CodecMode::Shared};
        case Method::Baseline3D: return {Strategy::Uniform3D, CodecMode::Shared};
    }
    throw InvalidArgument("unknown method");
}

/// Per-level absolute bounds for a dataset under a config.
inline std::vector<double> level_error_bounds(const AMRDataset& ds, const CompressConfig& cfg) {
    const double base = resolve_eb(cfg.eb, global_range(ds));
    return allocate_error_bounds(base, ds.levels.size(), ds.refinement_ratio, cfg.allocation);
}

inline Archive compress_dataset(const AMRDataset& ds, const CompressConfig& cfg) {
    validate_dataset(ds);
    if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) throw InvalidArgument("threshold must lie in (0, 1)");
    const auto ebs = level_error_bounds(ds, cfg);
    Archive a;
    a.method = cfg.method;
    a.value_type = ds.value_type;
    a.refinement_ratio = ds.refinement_ratio;
    a.levels.resize(ds.levels.size());

    if (cfg.method == Method::Baseline3D) {
        // One bound for the whole grid: the tightest level bound keeps every level within its own.
        const double eb = *std::min_element(ebs.begin(), ebs.end());
        const auto grid = flatten_to_uniform(ds);
        for (std::size_t l = 0; l < ds.levels.size(); ++l) {
            const AMRLevel level = detail::with_block_size(ds.levels[l], cfg.block_size);
            auto& rec = a.levels[l];
            rec.strategy = Strategy::Uniform3D;
            rec.dims = level.dims();
            rec.unit_block_size = level.unit_block_size;
            rec.block_mask = block_flags(level);
            rec.deflate = cfg.deflate;
        }
        a.levels[0].stream = she_compress({grid.values}, eb, ds.value_type);
        return a;
    }

    detail::parallel_for(ds.levels.size(), cfg.threads, [&](std::size_t l) {
        const AMRLevel level = detail::with_block_size(ds.levels[l], cfg.block_size);
        const auto [strategy, mode] = method_plan(cfg.method, density(level), cfg.threshold);
        a.levels[l] = encode_level(level, strategy, cfg.codec_mode.value_or(mode), ebs[l], ds.value_type, cfg);
    });
    return a;
}

inline DatasetGeometry archive_geometry(const Archive& a) {
    DatasetGeometry g;
    g.refinement_ratio = a.refinement_ratio;
    g.value_type = a.value_type;
    for (const auto& rec : a.levels) {
        Array3<std::uint8_t> mask;
        if (uses_subblocks(rec.strategy)) {
            const std::size_t b = rec.unit_block_size;
            Array3<std::uint8_t> flags(Dims3{rec.dims.nx / b, rec.dims.ny / b, rec.dims.nz / b}, 0);
            for (const auto& sb : rec.plan.blocks)
                for (std::size_t z = 0; z < sb.shape.nz; ++z)
                    for (std::size_t y = 0; y < sb.shape.ny; ++y)
                        for (std::size_t x = 0; x < sb.shape.nx; ++x) {
                            const Index3 p{sb.origin.x + x, sb.origin.y + y, sb.origin.z + z};
                            if (p.x >= flags.dims().nx || p.y >= flags.dims().ny || p.z >= flags.dims().nz) {
                                throw StructureError("sub-block exceeds level bounds");
                            }
                            flags(p.x, p.y, p.z) = 1;
                        }
            mask = expand_block_flags(flags, b);
        } else {
            mask = expand_block_flags(rec.block_mask, rec.unit_block_size);
        }
        g.levels.push_back({rec.unit_block_size, std::move(mask)});
    }
    return g;
}

inline AMRDataset decompress_dataset(const Archive& a, unsigned threads = 0) {
    if (a.levels.empty()) throw StructureError("archive has no levels");
    AMRDataset ds;
    ds.refinement_ratio = a.refinement_ratio;
    ds.value_type = a.value_type;

    if (a.method == Method::Baseline3D) {
        const auto geo = archive_geometry(a);
        const auto& rec = a.levels.front();
        if (!rec.stream) throw CorruptStream("uniform baseline archive has no stream");
        auto blocks = decompress_blocks(*rec.stream);
        const auto owner = ownership(geo);
        UniformGrid g{std::move(blocks.front()), owner};
        ds = split_uniform(g, geo);
    } else {
        ds.levels.resize(a.levels.size());
        detail::parallel_for(a.levels.size(), threads, [&](std::size_t l) {
            ds.levels[l] = decode_level(a.levels[l], static_cast<int>(l));
        });
    }
    validate_level_chain(geometry_of(ds));
    return ds;
}

// ---------------------------------------------------------------------------
// Archive file
//
//   "TACP" u16 version=1 u8 method
//   u8 value_type u8 num_levels u16 refinement_ratio
//   per level: u32 nx ny nz, u32 unit_block_size
//   per level: u64 record length, record:
//     plan: u8 strategy, then either (u32 count, sub-blocks) or
//           (unit-block bitmap [, u8 x_layers, u8 y_slices for GSP])
//     u8 has_stream, block-set stream if present

inline constexpr std::uint16_t kArchiveVersion = 1;

inline std::vector<std::uint8_t> serialize_level(const LevelRecord& rec) {
    ByteWriter w;
    if (uses_subblocks(rec.strategy)) {
        PartitionPlan p = rec.plan;
        p.strategy = rec.strategy;
        write_plan(w, p);
    } else {
        w.u8(static_cast<std::uint8_t>(rec.strategy));
        w.bytes(pack_bits(rec.block_mask.span()));
        if (rec.strategy == Strategy::GSP) {
            w.u8(static_cast<std::uint8_t>(rec.gsp_x_layers));
            w.u8(static_cast<std::uint8_t>(rec.gsp_y_slices));
        }
    }
    w.u8(rec.stream ? 1 : 0);
    if (rec.stream) write_block_set(w, *rec.stream, rec.deflate);
    return w.take();
}

inline std::vector<std::uint8_t> serialize_archive(const Archive& a) {
    ByteWriter w;
    w.magic("TACP");
    w.u16(kArchiveVersion);
    w.u8(static_cast<std::uint8_t>(a.method));
    w.u8(static_cast<std::uint8_t>(a.value_type));
    w.u8(static_cast<std::uint8_t>(a.levels.size()));
    w.u16(static_cast<std::uint16_t>(a.refinement_ratio));
    for (const auto& rec : a.levels) {
        w.u32(static_cast<std::uint32_t>(rec.dims.nx));
        w.u32(static_cast<std::uint32_t>(rec.dims.ny));
        w.u32(static_cast<std::uint32_t>(rec.dims.nz));
        w.u32(static_cast<std::uint32_t>(rec.unit_block_size));
    }
    for (const auto& rec : a.levels) {
        const auto bytes = serialize_level(rec);
        w.u64(bytes.size());
        w.bytes(bytes);
    }
    return w.take();
}

inline Archive parse_archive(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_magic("TACP");
    if (r.u16() != kArchiveVersion) throw CorruptStream("unsupported archive version");
    Archive a;
    const std::uint8_t method = r.u8();
    if (method > 6) throw CorruptStream("unknown method tag");
    a.method = static_cast<Method>(method);
    const std::uint8_t vt = r.u8();
    if (vt > 1) throw CorruptStream("unknown value type");
    a.value_type = static_cast<ValueType>(vt);
    const std::size_t nlevels = r.u8();
    a.refinement_ratio = r.u16();
    if (nlevels == 0) throw CorruptStream("archive has no levels");
    a.levels.resize(nlevels);
    for (auto& rec : a.levels) {
        rec.dims = {r.u32(), r.u32(), r.u32()};
        rec.unit_block_size = r.u32();
        const std::size_t b = rec.unit_block_size;
        if (b == 0 || rec.dims.nx % b || rec.dims.ny % b || rec.dims.nz % b) {
            throw CorruptStream("level dims not divisible by unit block size");
        }
    }
    for (auto& rec : a.levels) {
        const std::uint64_t len = r.u64();
        if (len > r.remaining()) throw CorruptStream("level record truncated");
        const auto record = r.bytes(static_cast<std::size_t>(len));
        ByteReader lr(record);
        const std::uint8_t tag = lr.u8();
        if (tag > 6) throw CorruptStream("unknown strategy tag");
        rec.strategy = static_cast<Strategy>(tag);
        const std::size_t b = rec.unit_block_size;
        const Dims3 bd{rec.dims.nx / b, rec.dims.ny / b, rec.dims.nz / b};
        if (uses_subblocks(rec.strategy)) {
            rec.plan = read_plan_body(lr, rec.strategy);
        } else {
            rec.block_mask = Array3<std::uint8_t>(bd, unpack_bits(lr.bytes((bd.volume() + 7) / 8), bd.volume()));
            if (rec.strategy == Strategy::GSP) {
                rec.gsp_x_layers = lr.u8();
                rec.gsp_y_slices = lr.u8();
            }
        }
        const std::uint8_t has_stream = lr.u8();
        if (has_stream > 1) throw CorruptStream("bad stream flag");
        if (has_stream) {
            std::vector<Dims3> dims = expected_block_dims(rec);
            if (rec.strategy == Strategy::Uniform3D) dims = {a.levels.front().dims};
            const std::size_t at = lr.position();
            rec.stream = read_block_set(lr, dims, a.value_type);
            rec.deflate = record[at + 9] != 0;  // after u8 mode, f64 eb
        }
        if (!lr.at_end()) throw CorruptStream("trailing bytes in level record");
    }
    if (!r.at_end()) throw CorruptStream("trailing bytes after archive");
    if (a.method == Method::Baseline3D) {
        for (const auto& rec : a.levels)
            if (rec.strategy != Strategy::Uniform3D) throw CorruptStream("mixed strategies in uniform archive");
    } else {
        for (const auto& rec : a.levels)
            if (rec.strategy == Strategy::Uniform3D) throw CorruptStream("uniform level in per-level archive");
    }
    return a;
}

inline std::vector<std::uint8_t> compress_to_bytes(const AMRDataset& ds, const CompressConfig& cfg) {
    return serialize_archive(compress_dataset(ds, cfg));
}

inline AMRDataset decompress_from_bytes(std::span<const std::uint8_t> bytes, unsigned threads = 0) {
    return decompress_dataset(parse_archive(bytes), threads);
}

}  // namespace tacplus

#endif  // TACPLUS_PIPELINE_HPP
