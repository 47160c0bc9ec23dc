#ifndef TACPLUS_CODEC_BITSTREAM_HPP
#define TACPLUS_CODEC_BITSTREAM_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "tacplus/common.hpp"

namespace tacplus {

/// MSB-first bit packer.
class BitWriter {
public:
    /// Append the low `len` bits of `code`, most significant first. len <= 57.
    void put(std::uint64_t code, unsigned len) {
        acc_ = (acc_ << len) | (code & ((len == 64) ? ~0ull : ((1ull << len) - 1)));
        nacc_ += len;
        bits_ += len;
        while (nacc_ >= 8) {
            nacc_ -= 8;
            bytes_.push_back(static_cast<std::uint8_t>(acc_ >> nacc_));
        }
    }

    std::uint64_t bit_length() const { return bits_; }

    /// Flush the partial byte (zero padded) and hand over the buffer.
    std::vector<std::uint8_t> finish() {
        if (nacc_ > 0) {
            bytes_.push_back(static_cast<std::uint8_t>(acc_ << (8 - nacc_)));
            nacc_ = 0;
        }
        return std::move(bytes_);
    }

private:
    std::vector<std::uint8_t> bytes_;
    std::uint64_t acc_ = 0;
    unsigned nacc_ = 0;
    std::uint64_t bits_ = 0;
};

class BitReader {
public:
    BitReader(std::span<const std::uint8_t> bytes, std::uint64_t bit_length)
        : bytes_(bytes), limit_(bit_length) {
        if (bit_length > static_cast<std::uint64_t>(bytes.size()) * 8) {
            throw CorruptStream("bit length exceeds payload size");
        }
    }

    /// Next `len` bits (len <= 57) without consuming; zero-filled past the end.
    std::uint64_t peek(unsigned len) {
        refill();
        return (buf_ >> (64 - len)) & ((1ull << len) - 1);
    }

    void skip(unsigned len) {
        if (pos_ + len > limit_) throw CorruptStream("bitstream underrun");
        refill();
        buf_ <<= len;
        nbuf_ -= len;
        pos_ += len;
    }

    std::uint64_t position() const { return pos_; }
    std::uint64_t remaining() const { return limit_ - pos_; }

private:
    void refill() {
        while (nbuf_ <= 56) {
            const std::size_t byte_index = static_cast<std::size_t>((pos_ + nbuf_) / 8);
            const std::uint64_t byte = byte_index < bytes_.size() ? bytes_[byte_index] : 0;
            buf_ |= byte << (56 - nbuf_);
            nbuf_ += 8;
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::uint64_t limit_;
    std::uint64_t pos_ = 0;
    std::uint64_t buf_ = 0;  // left-aligned window starting at pos_
    unsigned nbuf_ = 0;
};

}  // namespace tacplus

#endif  // TACPLUS_CODEC_BITSTREAM_HPP
