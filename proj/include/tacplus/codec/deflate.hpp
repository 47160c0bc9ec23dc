#ifndef TACPLUS_CODEC_DEFLATE_HPP
#define TACPLUS_CODEC_DEFLATE_HPP

#include <zlib.h>

#include <cstdint>
#include <span>
#include <vector>

#include "tacplus/common.hpp"

namespace tacplus {

// Raw DEFLATE (no zlib/gzip wrapper) via zlib.

inline std::vector<std::uint8_t> deflate_bytes(std::span<const std::uint8_t> in, int level = 6) {
    z_stream zs{};
    if (deflateInit2(&zs, level, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
        throw std::runtime_error("deflateInit2 failed");
    }
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())));
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    const std::size_t produced = zs.total_out;
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw std::runtime_error("deflate did not finish");
    out.resize(produced);
    return out;
}

inline std::vector<std::uint8_t> inflate_bytes(std::span<const std::uint8_t> in, std::size_t raw_size) {
    z_stream zs{};
    if (inflateInit2(&zs, -15) != Z_OK) throw std::runtime_error("inflateInit2 failed");
    std::vector<std::uint8_t> out(raw_size);
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const std::size_t produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != raw_size) throw CorruptStream("inflate failed");
    return out;
}

}  // namespace tacplus

#endif  // TACPLUS_CODEC_DEFLATE_HPP
