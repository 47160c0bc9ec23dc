#ifndef TACPLUS_CODEC_BLOCK_CODEC_HPP
#define TACPLUS_CODEC_BLOCK_CODEC_HPP

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "tacplus/codec/bitstream.hpp"
#include "tacplus/codec/deflate.hpp"
#include "tacplus/codec/huffman.hpp"
#include "tacplus/codec/lorenzo.hpp"
#include "tacplus/common.hpp"

namespace tacplus {

/// Entropy-stage layout of a set of blocks. Values are the on-disk tags.
enum class CodecMode : std::uint8_t {
    Independent = 0,  // one Huffman table per block
    Merged = 1,       // same-shape blocks stacked along z, predicted together, one table per group
    Shared = 2,       // blocks predicted separately, one Huffman table for all (SHE)
};

inline const char* codec_mode_name(CodecMode m) {
    switch (m) {
        case CodecMode::Independent: return "independent";
        case CodecMode::Merged: return "merged";
        case CodecMode::Shared: return "shared";
    }
    return "?";
}

struct CompressedBlockSet {
    CodecMode mode = CodecMode::Shared;
    double eb_abs = 0.0;
    ValueType value_type = ValueType::F64;
    std::vector<Dims3> block_dims;          // plan order; not serialized (comes from the plan)
    std::vector<HuffmanTable> tables;
    std::vector<std::uint32_t> code_counts; // per block, plan order
    std::vector<std::uint8_t> payload;
    std::uint64_t payload_bits = 0;
    std::vector<double> unpredictable;      // encode order
    std::vector<double> coefficients;       // regression coefficients; always empty (Lorenzo only)

    std::size_t total_codes() const {
        std::size_t n = 0;
        for (auto c : code_counts) n += c;
        return n;
    }
};

namespace detail {

inline std::vector<Dims3> dims_of(const std::vector<Array3<double>>& blocks) {
    std::vector<Dims3> d;
    d.reserve(blocks.size());
    for (const auto& b : blocks) d.push_back(b.dims());
    return d;
}

inline void require_blocks(const std::vector<Array3<double>>& blocks) {
    if (blocks.empty()) throw InvalidArgument("block list is empty");
    for (const auto& b : blocks)
        if (b.size() == 0) throw InvalidArgument("zero-volume block");
}

inline void append_codes(std::vector<std::uint16_t>& all, const QuantizedBlock& qb) {
    all.insert(all.end(), qb.codes.begin(), qb.codes.end());
}

}  // namespace detail

/// Group indices of blocks with identical dims, groups in order of first
/// appearance and members in plan order.
inline std::vector<std::vector<std::size_t>> group_by_shape(const std::vector<Dims3>& dims) {
    std::vector<std::vector<std::size_t>> groups;
    std::vector<Dims3> keys;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        std::size_t g = 0;
        while (g < keys.size() && !(keys[g] == dims[i])) ++g;
        if (g == keys.size()) {
            keys.push_back(dims[i]);
            groups.emplace_back();
        }
        groups[g].push_back(i);
    }
    return groups;
}

/// Stack same-shape blocks along z into one tall array.
inline Array3<double> concat_z(const std::vector<const Array3<double>*>& group) {
    if (group.empty()) throw InvalidArgument("empty merge group");
    const Dims3 d0 = group.front()->dims();
    std::vector<double> data;
    data.reserve(d0.volume() * group.size());
    for (const auto* b : group) {
        if (!(b->dims() == d0)) throw InvalidArgument("shape mismatch within merge group");
        data.insert(data.end(), b->vec().begin(), b->vec().end());
    }
    return Array3<double>(Dims3{d0.nx, d0.ny, d0.nz * group.size()}, std::move(data));
}

/// SHE: quantize every block on its own, then one histogram and one Huffman table
/// over all codes; blocks are encoded back to back in input order.
inline CompressedBlockSet she_compress(const std::vector<Array3<double>>& blocks, double eb_abs,
                                       ValueType vt = ValueType::F64) {
    detail::require_blocks(blocks);
    CompressedBlockSet set;
    set.mode = CodecMode::Shared;
    set.eb_abs = eb_abs;
    set.value_type = vt;
    set.block_dims = detail::dims_of(blocks);
    std::vector<std::uint16_t> all;
    for (const auto& b : blocks) {
        auto qb = quantize_block(b.span(), b.dims(), eb_abs, vt);
        detail::append_codes(all, qb);
        set.code_counts.push_back(static_cast<std::uint32_t>(qb.codes.size()));
        set.unpredictable.insert(set.unpredictable.end(), qb.unpredictable.begin(), qb.unpredictable.end());
    }
    set.tables.push_back(build_huffman(make_histogram<std::uint16_t>(all)));
    BitWriter w;
    huffman_encode<std::uint16_t>(set.tables.front(), all, w);
    set.payload_bits = w.bit_length();
    set.payload = w.finish();
    return set;
}

/// Same quantization as SHE, but each block carries its own Huffman table.
inline CompressedBlockSet independent_compress(const std::vector<Array3<double>>& blocks, double eb_abs,
                                               ValueType vt = ValueType::F64) {
    detail::require_blocks(blocks);
    CompressedBlockSet set;
    set.mode = CodecMode::Independent;
    set.eb_abs = eb_abs;
    set.value_type = vt;
    set.block_dims = detail::dims_of(blocks);
    BitWriter w;
    for (const auto& b : blocks) {
        auto qb = quantize_block(b.span(), b.dims(), eb_abs, vt);
        set.tables.push_back(build_huffman(make_histogram<std::uint16_t>(qb.codes)));
        huffman_encode<std::uint16_t>(set.tables.back(), qb.codes, w);
        set.code_counts.push_back(static_cast<std::uint32_t>(qb.codes.size()));
        set.unpredictable.insert(set.unpredictable.end(), qb.unpredictable.begin(), qb.unpredictable.end());
    }
    set.payload_bits = w.bit_length();
    set.payload = w.finish();
    return set;
}

/// Pre-SHE layout: blocks of identical shape are stacked along z and predicted as
/// one array (so prediction runs across unrelated block boundaries), one table
/// per group.
inline CompressedBlockSet merged_compress(const std::vector<Array3<double>>& blocks, double eb_abs,
                                          ValueType vt = ValueType::F64) {
    detail::require_blocks(blocks);
    CompressedBlockSet set;
    set.mode = CodecMode::Merged;
    set.eb_abs = eb_abs;
    set.value_type = vt;
    set.block_dims = detail::dims_of(blocks);
    for (const auto& b : blocks) set.code_counts.push_back(static_cast<std::uint32_t>(b.size()));
    BitWriter w;
    for (const auto& members : group_by_shape(set.block_dims)) {
        std::vector<const Array3<double>*> group;
        for (auto i : members) group.push_back(&blocks[i]);
        const auto tall = concat_z(group);
        auto qb = quantize_block(tall.span(), tall.dims(), eb_abs, vt);
        set.tables.push_back(build_huffman(make_histogram<std::uint16_t>(qb.codes)));
        huffman_encode<std::uint16_t>(set.tables.back(), qb.codes, w);
        set.unpredictable.insert(set.unpredictable.end(), qb.unpredictable.begin(), qb.unpredictable.end());
    }
    set.payload_bits = w.bit_length();
    set.payload = w.finish();
    return set;
}

inline CompressedBlockSet compress_blocks(CodecMode mode, const std::vector<Array3<double>>& blocks,
                                          double eb_abs, ValueType vt = ValueType::F64) {
    switch (mode) {
        case CodecMode::Independent: return independent_compress(blocks, eb_abs, vt);
        case CodecMode::Merged: return merged_compress(blocks, eb_abs, vt);
        case CodecMode::Shared: return she_compress(blocks, eb_abs, vt);
    }
    throw InvalidArgument("unknown codec mode");
}

namespace detail {

class UnpredictableCursor {
public:
    explicit UnpredictableCursor(const std::vector<double>& v) : v_(v) {}
    std::vector<double> take_for(const std::vector<std::uint16_t>& codes) {
        std::size_t n = 0;
        for (auto c : codes) n += c == 0 ? 1 : 0;
        if (n > v_.size() - pos_) throw CorruptStream("unpredictable stream underrun");
        std::vector<double> out(v_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                v_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return out;
    }
    bool exhausted() const { return pos_ == v_.size(); }

private:
    const std::vector<double>& v_;
    std::size_t pos_ = 0;
};

inline std::vector<std::uint16_t> decode_codes(const HuffmanTable& t, BitReader& r, std::size_t n) {
    std::vector<std::uint16_t> codes(n);
    for (auto& c : codes) {
        const std::uint32_t s = t.decode(r);
        if (s >= kQuantRange) throw CorruptStream("quantization code out of range");
        c = static_cast<std::uint16_t>(s);
    }
    return codes;
}

}  // namespace detail

/// Decode any mode back to per-block arrays, in plan order.
inline std::vector<Array3<double>> decompress_blocks(const CompressedBlockSet& set) {
    const std::size_t n = set.block_dims.size();
    if (n == 0) throw InvalidArgument("compressed block set is empty");
    if (set.code_counts.size() != n) throw CorruptStream("block count mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (set.code_counts[i] != set.block_dims[i].volume()) {
            throw CorruptStream("per-block code count does not match block dims");
        }
    }
    BitReader r(set.payload, set.payload_bits);
    detail::UnpredictableCursor unpred(set.unpredictable);
    std::vector<Array3<double>> out(n);

    auto decode_one = [&](const HuffmanTable& t, const Dims3& d) {
        QuantizedBlock qb;
        qb.dims = d;
        qb.eb_abs = set.eb_abs;
        qb.codes = detail::decode_codes(t, r, d.volume());
        qb.unpredictable = unpred.take_for(qb.codes);
        return dequantize_block(qb, set.value_type);
    };

    switch (set.mode) {
        case CodecMode::Shared:
            if (set.tables.size() != 1) throw CorruptStream("shared mode needs exactly one table");
            for (std::size_t i = 0; i < n; ++i) {
                out[i] = Array3<double>(set.block_dims[i], decode_one(set.tables[0], set.block_dims[i]));
            }
            break;
        case CodecMode::Independent:
            if (set.tables.size() != n) throw CorruptStream("independent mode needs one table per block");
            for (std::size_t i = 0; i < n; ++i) {
                out[i] = Array3<double>(set.block_dims[i], decode_one(set.tables[i], set.block_dims[i]));
            }
            break;
        case CodecMode::Merged: {
            const auto groups = group_by_shape(set.block_dims);
            if (set.tables.size() != groups.size()) throw CorruptStream("merged mode needs one table per group");
            for (std::size_t g = 0; g < groups.size(); ++g) {
                const Dims3 d0 = set.block_dims[groups[g].front()];
                const Dims3 tall{d0.nx, d0.ny, d0.nz * groups[g].size()};
                const auto recon = decode_one(set.tables[g], tall);
                const std::size_t per = d0.volume();
                for (std::size_t k = 0; k < groups[g].size(); ++k) {
                    std::vector<double> part(recon.begin() + static_cast<std::ptrdiff_t>(k * per),
                                             recon.begin() + static_cast<std::ptrdiff_t>((k + 1) * per));
                    out[groups[g][k]] = Array3<double>(d0, std::move(part));
                }
            }
            break;
        }
        default:
            throw CorruptStream("unknown codec mode");
    }
    if (r.remaining() != 0) throw CorruptStream("trailing bits in payload");
    if (!unpred.exhausted()) throw CorruptStream("unused unpredictable values");
    return out;
}

inline std::vector<Array3<double>> she_decompress(const CompressedBlockSet& set) {
    if (set.mode != CodecMode::Shared) throw InvalidArgument("not a shared-table block set");
    return decompress_blocks(set);
}

// ---------------------------------------------------------------------------
// Stream layout
//
//   u8 mode, f64 eb_abs, u8 deflate flag,
//   then the body, as (u64 size, bytes) or (u64 raw size, u64 deflated size, deflated bytes):
//     u32 table count, per table: u32 symbol count, per symbol u32 value + u8 length
//     u32 block count, per block u32 code count
//     u64 payload bit length, payload bytes (byte padded)
//     u32 unpredictable count, raw values at the dataset value width
//     u32 coefficient count (always 0)

inline void write_block_set(ByteWriter& w, const CompressedBlockSet& set, bool deflate = true) {
    ByteWriter body;
    body.u32(static_cast<std::uint32_t>(set.tables.size()));
    for (const auto& t : set.tables) t.write(body);
    body.u32(static_cast<std::uint32_t>(set.code_counts.size()));
    for (auto c : set.code_counts) body.u32(c);
    body.u64(set.payload_bits);
    body.bytes(set.payload);
    body.u32(static_cast<std::uint32_t>(set.unpredictable.size()));
    for (double v : set.unpredictable) body.value(set.value_type, v);
    body.u32(static_cast<std::uint32_t>(set.coefficients.size()));
    for (double v : set.coefficients) body.f64(v);

    w.u8(static_cast<std::uint8_t>(set.mode));
    w.f64(set.eb_abs);
    w.u8(deflate ? 1 : 0);
    if (deflate) {
        const auto packed = deflate_bytes(body.buffer());
        w.u64(body.size());
        w.u64(packed.size());
        w.bytes(packed);
    } else {
        w.u64(body.size());
        w.bytes(body.buffer());
    }
}

/// `block_dims` comes from the partition plan that precedes the stream.
inline CompressedBlockSet read_block_set(ByteReader& r, const std::vector<Dims3>& block_dims, ValueType vt) {
    CompressedBlockSet set;
    const std::uint8_t mode = r.u8();
    if (mode > 2) throw CorruptStream("unknown codec mode");
    set.mode = static_cast<CodecMode>(mode);
    set.eb_abs = r.f64();
    if (!(set.eb_abs > 0.0)) throw CorruptStream("non-positive error bound in stream");
    set.value_type = vt;
    set.block_dims = block_dims;
    const std::uint8_t deflated = r.u8();
    if (deflated > 1) throw CorruptStream("bad deflate flag");

    std::vector<std::uint8_t> inflated;
    std::span<const std::uint8_t> body_bytes;
    if (deflated) {
        const std::uint64_t raw = r.u64();
        const std::uint64_t comp = r.u64();
        if (comp > r.remaining()) throw CorruptStream("deflated body truncated");
        if (raw > (std::uint64_t{1} << 40)) throw CorruptStream("implausible body size");
        inflated = inflate_bytes(r.bytes(static_cast<std::size_t>(comp)), static_cast<std::size_t>(raw));
        body_bytes = inflated;
    } else {
        const std::uint64_t raw = r.u64();
        if (raw > r.remaining()) throw CorruptStream("block-set body truncated");
        body_bytes = r.bytes(static_cast<std::size_t>(raw));
    }
    ByteReader b(body_bytes);
    const std::uint32_t ntables = b.u32();
    for (std::uint32_t i = 0; i < ntables; ++i) set.tables.push_back(HuffmanTable::read(b));
    const std::uint32_t nblocks = b.u32();
    if (nblocks != block_dims.size()) throw CorruptStream("block count does not match plan");
    for (std::uint32_t i = 0; i < nblocks; ++i) set.code_counts.push_back(b.u32());
    set.payload_bits = b.u64();
    const std::uint64_t payload_bytes = (set.payload_bits + 7) / 8;
    if (payload_bytes > b.remaining()) throw CorruptStream("payload truncated");
    const auto p = b.bytes(static_cast<std::size_t>(payload_bytes));
    set.payload.assign(p.begin(), p.end());
    const std::uint32_t nunpred = b.u32();
    if (static_cast<std::uint64_t>(nunpred) * value_bytes(vt) > b.remaining()) {
        throw CorruptStream("unpredictable section truncated");
    }
    set.unpredictable.reserve(nunpred);
    for (std::uint32_t i = 0; i < nunpred; ++i) set.unpredictable.push_back(b.value(vt));
    const std::uint32_t ncoef = b.u32();
    if (static_cast<std::uint64_t>(ncoef) * 8 > b.remaining()) throw CorruptStream("coefficient section truncated");
    for (std::uint32_t i = 0; i < ncoef; ++i) set.coefficients.push_back(b.f64());
    if (!b.at_end()) throw CorruptStream("trailing bytes in block-set body");
    return set;
}

}  // namespace tacplus

#endif  // TACPLUS_CODEC_BLOCK_CODEC_HPP
