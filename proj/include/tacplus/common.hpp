#ifndef TACPLUS_COMMON_HPP
#define TACPLUS_COMMON_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace tacplus {

// Error taxonomy. Each maps to a distinct CLI exit code.

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Inconsistent geometry: bad masks, overlapping ownership, dims mismatch.
class StructureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input values the codec cannot handle (NaN, inf).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Truncated or internally inconsistent encoded stream.
class CorruptStream : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateRange : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

enum class ValueType : std::uint8_t { F32 = 0, F64 = 1 };

inline std::size_t value_bytes(ValueType vt) { return vt == ValueType::F32 ? 4 : 8; }
inline std::size_t value_bits(ValueType vt) { return value_bytes(vt) * 8; }

/// Round to the storage precision of the value type.
inline double round_to(ValueType vt, double v) {
    return vt == ValueType::F32 ? static_cast<double>(static_cast<float>(v)) : v;
}

struct Dims3 {
    std::size_t nx = 0, ny = 0, nz = 0;

    std::size_t volume() const { return nx * ny * nz; }
    std::size_t operator[](int axis) const { return axis == 0 ? nx : axis == 1 ? ny : nz; }
    std::size_t& operator[](int axis) { return axis == 0 ? nx : axis == 1 ? ny : nz; }
    bool operator==(const Dims3&) const = default;
};

struct Index3 {
    std::size_t x = 0, y = 0, z = 0;

    std::size_t operator[](int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
    std::size_t& operator[](int axis) { return axis == 0 ? x : axis == 1 ? y : z; }
    bool operator==(const Index3&) const = default;
};

/// Dense 3D array, linear index = x + nx*(y + ny*z).
template <class T>
class Array3 {
public:
    Array3() = default;
    explicit Array3(Dims3 dims, T fill = T{}) : dims_(dims), data_(dims.volume(), fill) {}
    Array3(Dims3 dims, std::vector<T> data) : dims_(dims), data_(std::move(data)) {
        if (data_.size() != dims_.volume()) {
            throw InvalidArgument("Array3: data length does not match dims");
        }
    }

    const Dims3& dims() const { return dims_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
        return x + dims_.nx * (y + dims_.ny * z);
    }
    T& operator()(std::size_t x, std::size_t y, std::size_t z) { return data_[index(x, y, z)]; }
    const T& operator()(std::size_t x, std::size_t y, std::size_t z) const {
        return data_[index(x, y, z)];
    }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> span() { return data_; }
    std::span<const T> span() const { return data_; }
    std::vector<T>& vec() { return data_; }
    const std::vector<T>& vec() const { return data_; }

    bool operator==(const Array3&) const = default;

private:
    Dims3 dims_{};
    std::vector<T> data_;
};

// Little-endian byte serialization helpers.

class ByteWriter {
public:
    template <class T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        std::array<std::uint8_t, sizeof(T)> raw{};
        std::memcpy(raw.data(), &v, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) {
            std::reverse(raw.begin(), raw.end());
        }
        buf_.insert(buf_.end(), raw.begin(), raw.end());
    }
    void u8(std::uint8_t v) { put(v); }
    void u16(std::uint16_t v) { put(v); }
    void u32(std::uint32_t v) { put(v); }
    void u64(std::uint64_t v) { put(v); }
    void f32(float v) { put(v); }
    void f64(double v) { put(v); }
    void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void magic(std::string_view m) { buf_.insert(buf_.end(), m.begin(), m.end()); }

    /// Write a value at the storage width of `vt`.
    void value(ValueType vt, double v) {
        if (vt == ValueType::F32) {
            f32(static_cast<float>(v));
        } else {
            f64(v);
        }
    }

    std::size_t size() const { return buf_.size(); }
    std::vector<std::uint8_t>& buffer() { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    template <class T>
    T get() {
        need(sizeof(T));
        std::array<std::uint8_t, sizeof(T)> raw{};
        std::memcpy(raw.data(), data_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) {
            std::reverse(raw.begin(), raw.end());
        }
        pos_ += sizeof(T);
        T v;
        std::memcpy(&v, raw.data(), sizeof(T));
        return v;
    }
    std::uint8_t u8() { return get<std::uint8_t>(); }
    std::uint16_t u16() { return get<std::uint16_t>(); }
    std::uint32_t u32() { return get<std::uint32_t>(); }
    std::uint64_t u64() { return get<std::uint64_t>(); }
    float f32() { return get<float>(); }
    double f64() { return get<double>(); }
    double value(ValueType vt) { return vt == ValueType::F32 ? static_cast<double>(f32()) : f64(); }

    std::span<const std::uint8_t> bytes(std::size_t n) {
        need(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    void expect_magic(std::string_view m) {
        auto b = bytes(m.size());
        if (std::memcmp(b.data(), m.data(), m.size()) != 0) {
            throw CorruptStream("bad magic, expected \"" + std::string(m) + "\"");
        }
    }

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool at_end() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (n > data_.size() - pos_) {
            throw CorruptStream("unexpected end of stream");
        }
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

// Packed bit vector, LSB-first within each byte, used by occupancy bitmaps.
inline std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> flags) {
    std::vector<std::uint8_t> out((flags.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (flags[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    }
    return out;
}

inline std::vector<std::uint8_t> unpack_bits(std::span<const std::uint8_t> packed, std::size_t n) {
    if (packed.size() < (n + 7) / 8) throw CorruptStream("bitmap too short");
    std::vector<std::uint8_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = (packed[i / 8] >> (i % 8)) & 1u;
    return out;
}

}  // namespace tacplus

#endif  // TACPLUS_COMMON_HPP
