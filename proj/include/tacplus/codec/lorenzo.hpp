#ifndef TACPLUS_CODEC_LORENZO_HPP
#define TACPLUS_CODEC_LORENZO_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tacplus/common.hpp"

namespace tacplus {

enum class EbMode : std::uint8_t { Abs = 0, Rel = 1 };

struct ErrorBound {
    EbMode mode = EbMode::Rel;
    double magnitude = 1e-3;
};

/// ABS -> magnitude; REL -> magnitude * value range.
inline double resolve_eb(const ErrorBound& eb, double global_range) {
    if (!(eb.magnitude > 0.0) || !std::isfinite(eb.magnitude)) {
        throw InvalidArgument("error bound magnitude must be positive and finite");
    }
    if (global_range < 0.0) throw InvalidArgument("value range must be non-negative");
    if (eb.mode == EbMode::Abs) return eb.magnitude;
    if (global_range == 0.0) {
        throw DegenerateRange("relative error bound on data with zero value range");
    }
    return eb.magnitude * global_range;
}

/// Quantization alphabet: codes in [0, kQuantRange), 0 reserved for unpredictable.
inline constexpr std::uint32_t kQuantRange = 65536;
inline constexpr std::int64_t kQuantRadius = kQuantRange / 2;

struct QuantizedBlock {
    Dims3 dims;
    std::vector<std::uint16_t> codes;
    std::vector<double> unpredictable;  // exact values of escaped cells, in traversal order
    double eb_abs = 0.0;
};

namespace detail {

/// First-order 3D Lorenzo prediction from reconstructed neighbors; neighbors
/// outside the array read as 0.
inline double lorenzo_predict(const double* r, std::size_t x, std::size_t y, std::size_t z,
                              std::size_t nx, std::size_t nxy) {
    const std::size_t i = x + nx * y + nxy * z;
    const bool bx = x > 0, by = y > 0, bz = z > 0;
    const double f100 = bx ? r[i - 1] : 0.0;
    const double f010 = by ? r[i - nx] : 0.0;
    const double f001 = bz ? r[i - nxy] : 0.0;
    const double f110 = bx && by ? r[i - 1 - nx] : 0.0;
    const double f101 = bx && bz ? r[i - 1 - nxy] : 0.0;
    const double f011 = by && bz ? r[i - nx - nxy] : 0.0;
    const double f111 = bx && by && bz ? r[i - 1 - nx - nxy] : 0.0;
    return f100 + f010 + f001 - f110 - f101 - f011 + f111;
}

}  // namespace detail

/// Closed-loop Lorenzo prediction + linear quantization, x-fastest traversal.
///
/// Each cell is predicted from already reconstructed values, so the decoder sees
/// the same predictions. A residual that does not fit the code range, or whose
/// reconstruction (after rounding to the storage type) misses the bound, is
/// escaped with code 0 and stored verbatim.
inline QuantizedBlock quantize_block(std::span<const double> values, const Dims3& dims, double eb_abs,
                                     ValueType vt = ValueType::F64) {
    if (!(eb_abs > 0.0) || !std::isfinite(eb_abs)) throw InvalidArgument("eb_abs must be positive");
    if (values.size() != dims.volume()) throw InvalidArgument("value count does not match dims");
    QuantizedBlock qb;
    qb.dims = dims;
    qb.eb_abs = eb_abs;
    qb.codes.resize(values.size());
    std::vector<double> recon(values.size());
    const double step = 2.0 * eb_abs;
    const std::size_t nx = dims.nx, nxy = dims.nx * dims.ny;
    std::size_t i = 0;
    for (std::size_t z = 0; z < dims.nz; ++z)
        for (std::size_t y = 0; y < dims.ny; ++y)
            for (std::size_t x = 0; x < dims.nx; ++x, ++i) {
                const double v = values[i];
                if (!std::isfinite(v)) throw DataError("non-finite input value");
                const double pred = detail::lorenzo_predict(recon.data(), x, y, z, nx, nxy);
                const double q = std::round((v - pred) / step);
                if (std::abs(q) < static_cast<double>(kQuantRadius - 1)) {
                    const double r = round_to(vt, pred + q * step);
                    if (std::abs(r - v) <= eb_abs) {
                        qb.codes[i] = static_cast<std::uint16_t>(static_cast<std::int64_t>(q) + kQuantRadius);
                        recon[i] = r;
                        continue;
                    }
                }
                qb.codes[i] = 0;
                const double exact = round_to(vt, v);
                qb.unpredictable.push_back(exact);
                recon[i] = exact;
            }
    return qb;
}

/// Mirror of quantize_block.
inline std::vector<double> dequantize_block(const QuantizedBlock& qb, ValueType vt = ValueType::F64) {
    const Dims3& dims = qb.dims;
    if (qb.codes.size() != dims.volume()) throw CorruptStream("code count does not match dims");
    std::vector<double> recon(qb.codes.size());
    const double step = 2.0 * qb.eb_abs;
    const std::size_t nx = dims.nx, nxy = dims.nx * dims.ny;
    std::size_t i = 0, u = 0;
    for (std::size_t z = 0; z < dims.nz; ++z)
        for (std::size_t y = 0; y < dims.ny; ++y)
            for (std::size_t x = 0; x < dims.nx; ++x, ++i) {
                const std::uint16_t c = qb.codes[i];
                if (c == 0) {
                    if (u >= qb.unpredictable.size()) throw CorruptStream("unpredictable stream underrun");
                    recon[i] = qb.unpredictable[u++];
                    continue;
                }
                const double pred = detail::lorenzo_predict(recon.data(), x, y, z, nx, nxy);
                const double q = static_cast<double>(static_cast<std::int64_t>(c) - kQuantRadius);
                recon[i] = round_to(vt, pred + q * step);
            }
    if (u != qb.unpredictable.size()) throw CorruptStream("unused unpredictable values");
    return recon;
}

}  // namespace tacplus

#endif  // TACPLUS_CODEC_LORENZO_HPP
