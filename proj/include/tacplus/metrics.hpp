#ifndef TACPLUS_METRICS_HPP
#define TACPLUS_METRICS_HPP

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "tacplus/amr_model.hpp"
#include "tacplus/pipeline.hpp"

namespace tacplus {

/// Sum of squared errors and point count over stored cells.
struct ErrorStats {
    double sum_sq = 0.0;
    double max_abs = 0.0;
    std::size_t count = 0;
};

inline ErrorStats error_stats(const AMRDataset& orig, const AMRDataset& recon) {
    if (orig.levels.size() != recon.levels.size()) throw StructureError("level count mismatch");
    ErrorStats s;
    for (std::size_t l = 0; l < orig.levels.size(); ++l) {
        const auto& a = orig.levels[l];
        const auto& b = recon.levels[l];
        if (!(a.dims() == b.dims()) || a.occupancy != b.occupancy) {
            throw StructureError("level " + std::to_string(l) + " structure mismatch");
        }
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            if (!a.occupancy[i]) continue;
            const double e = a.values[i] - b.values[i];
            s.sum_sq += e * e;
            s.max_abs = std::max(s.max_abs, std::abs(e));
            ++s.count;
        }
    }
    return s;
}

inline double max_abs_error(const AMRDataset& orig, const AMRDataset& recon) {
    return error_stats(orig, recon).max_abs;
}

/// PSNR from the value range, squared-error sum and point count; +inf if lossless.
inline double psnr_from(double range, double sum_sq, std::size_t n) {
    if (n == 0) throw InvalidArgument("PSNR over zero points");
    if (sum_sq == 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(range) - 10.0 * std::log10(sum_sq / static_cast<double>(n));
}

inline double psnr(const AMRDataset& orig, const AMRDataset& recon) {
    const auto s = error_stats(orig, recon);
    return psnr_from(global_range(orig), s.sum_sq, s.count);
}

inline double compression_ratio(std::size_t orig_bytes, std::size_t archive_bytes) {
    if (orig_bytes == 0 || archive_bytes == 0) throw InvalidArgument("sizes must be positive");
    return static_cast<double>(orig_bytes) / static_cast<double>(archive_bytes);
}

inline double bit_rate(ValueType vt, double ratio) {
    if (!(ratio > 0.0)) throw InvalidArgument("compression ratio must be positive");
    return static_cast<double>(value_bits(vt)) / ratio;
}

inline std::size_t original_bytes(const AMRDataset& ds) {
    return stored_point_count(ds) * value_bytes(ds.value_type);
}

struct RDPoint {
    std::string dataset;
    Method method = Method::TacPlus;
    ErrorBound eb;
    double bit_rate = 0.0;
    double psnr = 0.0;
    double cr = 0.0;
    double comp_s = 0.0;
    double decomp_s = 0.0;
    std::size_t archive_bytes = 0;
    double max_error = 0.0;
};

/// Compress, decompress and measure one configuration. Timers cover the
/// pipeline only; no file I/O happens inside them.
inline RDPoint measure(const AMRDataset& ds, const CompressConfig& cfg, const std::string& dataset = "") {
    using clock = std::chrono::steady_clock;
    RDPoint p;
    p.dataset = dataset;
    p.method = cfg.method;
    p.eb = cfg.eb;
    const auto t0 = clock::now();
    const auto bytes = compress_to_bytes(ds, cfg);
    const auto t1 = clock::now();
    const auto recon = decompress_from_bytes(bytes, cfg.threads);
    const auto t2 = clock::now();
    p.comp_s = std::chrono::duration<double>(t1 - t0).count();
    p.decomp_s = std::chrono::duration<double>(t2 - t1).count();
    p.archive_bytes = bytes.size();
    p.cr = compression_ratio(original_bytes(ds), bytes.size());
    p.bit_rate = bit_rate(ds.value_type, p.cr);
    const auto s = error_stats(ds, recon);
    p.psnr = psnr_from(global_range(ds), s.sum_sq, s.count);
    p.max_error = s.max_abs;
    return p;
}

/// One point per (method, eb), methods outer, in the order given.
inline std::vector<RDPoint> rd_sweep(const AMRDataset& ds, const std::vector<Method>& methods,
                                     const std::vector<ErrorBound>& ebs, const CompressConfig& base = {},
                                     const std::string& dataset = "") {
    if (methods.empty() || ebs.empty()) throw InvalidArgument("rd_sweep needs methods and error bounds");
    std::vector<RDPoint> out;
    for (Method m : methods)
        for (const auto& eb : ebs) {
            CompressConfig cfg = base;
            cfg.method = m;
            cfg.eb = eb;
            out.push_back(measure(ds, cfg, dataset));
        }
    return out;
}

inline constexpr const char* kCsvHeader = "dataset,method,eb_mode,eb,bit_rate,psnr_db,cr,comp_s,decomp_s";

inline std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // snprintf honours LC_NUMERIC; force a '.' decimal separator.
    for (char& c : buf)
        if (c == ',') c = '.';
    return buf;
}

inline std::string csv_row(const RDPoint& p) {
    std::string s = p.dataset;
    s += ',';
    s += method_name(p.method);
    s += ',';
    s += p.eb.mode == EbMode::Abs ? "abs" : "rel";
    for (double v : {p.eb.magnitude, p.bit_rate, p.psnr, p.cr, p.comp_s, p.decomp_s}) {
        s += ',';
        s += format_number(v);
    }
    return s;
}

inline void write_csv(std::ostream& os, const std::vector<RDPoint>& points) {
    os << kCsvHeader << '\n';
    for (const auto& p : points) os << csv_row(p) << '\n';
}

}  // namespace tacplus

#endif  // TACPLUS_METRICS_HPP
