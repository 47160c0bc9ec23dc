#ifndef TACPLUS_DATAGEN_HPP
#define TACPLUS_DATAGEN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tacplus/amr_model.hpp"
#include "tacplus/common.hpp"

namespace tacplus {

/// Synthetic AMR fixture parameters.
///
/// thresholds[g] is the refinement threshold for the gap between level g (finer)
/// and level g+1; they must decrease strictly from g = 0 outward. Leave empty to
/// derive them from the field maximum.
struct GenConfig {
    Dims3 dims{128, 128, 128};
    std::size_t num_levels = 2;
    std::size_t refinement_ratio = 2;
    std::size_t unit_block_size = 16;
    std::size_t num_blobs = 24;
    double amp_min = 1.0, amp_max = 10.0;
    double width_min = 4.0, width_max = 16.0;  // Gaussian sigma, in finest cells
    std::vector<double> thresholds;
    std::uint64_t seed = 1;
    ValueType value_type = ValueType::F32;
};

/// Counter-based generator: the i-th draw for a seed is splitmix64(seed, i), so
/// sequences do not depend on call order or platform.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t at(std::uint64_t counter) const {
        std::uint64_t z = seed_ + (counter + 1) * 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    std::uint64_t next() { return at(counter_++); }
    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

struct Blob {
    double cx, cy, cz, amplitude, sigma;
};

inline void validate_config(const GenConfig& cfg) {
    if (cfg.num_levels == 0) throw InvalidArgument("num_levels must be >= 1");
    if (cfg.refinement_ratio < 1) throw InvalidArgument("refinement_ratio must be >= 1");
    if (cfg.unit_block_size == 0) throw InvalidArgument("unit_block_size must be >= 1");
    const std::size_t q = cfg.unit_block_size * ipow(cfg.refinement_ratio, cfg.num_levels - 1);
    for (int a = 0; a < 3; ++a) {
        if (cfg.dims[a] == 0 || cfg.dims[a] % q != 0) {
            throw InvalidArgument("dims must be divisible by block_size * ratio^(levels-1)");
        }
    }
    if (!cfg.thresholds.empty()) {
        if (cfg.thresholds.size() != cfg.num_levels - 1) {
            throw InvalidArgument("need one threshold per level gap");
        }
        for (std::size_t g = 0; g + 1 < cfg.thresholds.size(); ++g) {
            if (!(cfg.thresholds[g] > cfg.thresholds[g + 1])) {
                throw InvalidArgument("thresholds must increase strictly toward finer levels");
            }
        }
    }
    if (cfg.amp_min < 0 || cfg.amp_max < cfg.amp_min || cfg.width_min <= 0 ||
        cfg.width_max < cfg.width_min) {
        throw InvalidArgument("invalid blob amplitude/width ranges");
    }
}

inline std::vector<Blob> draw_blobs(const GenConfig& cfg) {
    CounterRng rng(cfg.seed);
    std::vector<Blob> blobs;
    blobs.reserve(cfg.num_blobs);
    for (std::size_t i = 0; i < cfg.num_blobs; ++i) {
        Blob b{};
        b.cx = rng.uniform(0.0, static_cast<double>(cfg.dims.nx));
        b.cy = rng.uniform(0.0, static_cast<double>(cfg.dims.ny));
        b.cz = rng.uniform(0.0, static_cast<double>(cfg.dims.nz));
        b.amplitude = rng.uniform(cfg.amp_min, cfg.amp_max);
        b.sigma = rng.uniform(cfg.width_min, cfg.width_max);
        blobs.push_back(b);
    }
    return blobs;
}

/// Sum of isotropic Gaussian bumps sampled at integer cell coordinates. The
/// Gaussian is separable, so each blob contributes ex[x]*ey[y]*ez[z]; blobs are
/// accumulated in draw order for every cell.
inline Array3<double> gen_field(const GenConfig& cfg) {
    validate_config(cfg);
    const Dims3 d = cfg.dims;
    Array3<double> field(d, 0.0);
    const auto blobs = draw_blobs(cfg);
    std::vector<double> ex(d.nx), ey(d.ny), ez(d.nz);
    auto factor = [](std::vector<double>& f, double c, double sigma) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double t = (static_cast<double>(i) - c) / sigma;
            f[i] = std::exp(-0.5 * t * t);
        }
    };
    for (const auto& b : blobs) {
        factor(ex, b.cx, b.sigma);
        factor(ey, b.cy, b.sigma);
        factor(ez, b.cz, b.sigma);
        for (std::size_t z = 0; z < d.nz; ++z)
            for (std::size_t y = 0; y < d.ny; ++y) {
                const double a = b.amplitude * ey[y] * ez[z];
                double* row = &field(0, y, z);
                for (std::size_t x = 0; x < d.nx; ++x) row[x] += a * ex[x];
            }
    }
    for (auto& v : field.vec()) v = round_to(cfg.value_type, v);
    return field;
}

namespace detail {

/// Max of the field over the finest-resolution footprint of each unit block of
/// level `level` (footprint side = b * r^level).
inline Array3<double> block_maxima(const Array3<double>& field, std::size_t side) {
    const Dims3& d = field.dims();
    Array3<double> m(Dims3{d.nx / side, d.ny / side, d.nz / side},
                     -std::numeric_limits<double>::infinity());
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                double& slot = m(x / side, y / side, z / side);
                slot = std::max(slot, field(x, y, z));
            }
    return m;
}

inline std::vector<double> resolved_thresholds(const Array3<double>& field, const GenConfig& cfg) {
    if (!cfg.thresholds.empty()) return cfg.thresholds;
    const double fmax = field.empty() ? 0.0 : *std::max_element(field.vec().begin(), field.vec().end());
    std::vector<double> t(cfg.num_levels - 1);
    const double levels = static_cast<double>(cfg.num_levels);
    for (std::size_t g = 0; g < t.size(); ++g) {
        t[g] = fmax * (levels - 1.0 - static_cast<double>(g)) / levels;
    }
    return t;
}

/// Per-level unit-block flags from the max-value refinement rule.
inline std::vector<Array3<std::uint8_t>> refinement_flags(
    const std::vector<Array3<double>>& maxima, const std::vector<double>& thresholds,
    std::size_t ratio) {
    const std::size_t L = maxima.size();
    std::vector<Array3<std::uint8_t>> flags;
    for (const auto& m : maxima) flags.emplace_back(m.dims(), std::uint8_t{0});
    std::fill(flags[L - 1].vec().begin(), flags[L - 1].vec().end(), std::uint8_t{1});
    for (std::size_t g = L - 1; g-- > 0;) {
        auto& coarse = flags[g + 1];
        auto& fine = flags[g];
        const Dims3& cd = coarse.dims();
        for (std::size_t z = 0; z < cd.nz; ++z)
            for (std::size_t y = 0; y < cd.ny; ++y)
                for (std::size_t x = 0; x < cd.nx; ++x) {
                    if (!coarse(x, y, z) || !(maxima[g + 1](x, y, z) > thresholds[g])) continue;
                    coarse(x, y, z) = 0;
                    for (std::size_t k = 0; k < ratio; ++k)
                        for (std::size_t j = 0; j < ratio; ++j)
                            for (std::size_t i = 0; i < ratio; ++i)
                                fine(x * ratio + i, y * ratio + j, z * ratio + k) = 1;
                }
    }
    return flags;
}

inline std::vector<Array3<double>> all_block_maxima(const Array3<double>& field,
                                                    const GenConfig& cfg) {
    std::vector<Array3<double>> maxima;
    for (std::size_t l = 0; l < cfg.num_levels; ++l) {
        maxima.push_back(block_maxima(field, cfg.unit_block_size * ipow(cfg.refinement_ratio, l)));
    }
    return maxima;
}

inline double flag_density(const Array3<std::uint8_t>& f) {
    std::size_t n = 0;
    for (auto v : f.vec()) n += v;
    return f.size() ? static_cast<double>(n) / static_cast<double>(f.size()) : 0.0;
}

}  // namespace detail

/// Split a finest-resolution field into a tree-based AMR hierarchy using the
/// max-value refinement criterion. Coarse values are block means of the field.
inline AMRDataset build_amr(const Array3<double>& field, const GenConfig& cfg) {
    validate_config(cfg);
    if (field.dims() != cfg.dims) throw InvalidArgument("field dims do not match config");
    const auto thresholds = detail::resolved_thresholds(field, cfg);
    const auto maxima = detail::all_block_maxima(field, cfg);
    const auto flags = detail::refinement_flags(maxima, thresholds, cfg.refinement_ratio);

    AMRDataset ds;
    ds.refinement_ratio = cfg.refinement_ratio;
    ds.value_type = cfg.value_type;
    const std::size_t b = cfg.unit_block_size;
    for (std::size_t l = 0; l < cfg.num_levels; ++l) {
        const std::size_t rate = ipow(cfg.refinement_ratio, l);
        const Dims3 d{cfg.dims.nx / rate, cfg.dims.ny / rate, cfg.dims.nz / rate};
        AMRLevel level;
        level.level_index = static_cast<int>(l);
        level.unit_block_size = b;
        level.occupancy = expand_block_flags(flags[l], b);
        level.values = Array3<double>(d, 0.0);
        const double inv = 1.0 / static_cast<double>(rate * rate * rate);
        for (std::size_t z = 0; z < d.nz; ++z)
            for (std::size_t y = 0; y < d.ny; ++y)
                for (std::size_t x = 0; x < d.nx; ++x) {
                    if (!level.occupancy(x, y, z)) continue;
                    double sum = 0.0;
                    for (std::size_t k = 0; k < rate; ++k)
                        for (std::size_t j = 0; j < rate; ++j)
                            for (std::size_t i = 0; i < rate; ++i)
                                sum += field(x * rate + i, y * rate + j, z * rate + k);
                    level.values(x, y, z) = round_to(cfg.value_type, rate == 1 ? sum : sum * inv);
                }
        ds.levels.push_back(std::move(level));
    }
    return ds;
}

/// Bisect the threshold of one level gap so that the finer level of that gap
/// reaches `target_density` as closely as possible. Other thresholds are held
/// fixed and bound the search so the ordering invariant survives.
inline GenConfig tune_threshold(const Array3<double>& field, GenConfig cfg, std::size_t gap,
                                double target_density, int iterations = 60) {
    validate_config(cfg);
    if (gap + 1 >= cfg.num_levels) throw InvalidArgument("gap index out of range");
    cfg.thresholds = detail::resolved_thresholds(field, cfg);
    const auto maxima = detail::all_block_maxima(field, cfg);
    const auto [fmin_it, fmax_it] = std::minmax_element(field.vec().begin(), field.vec().end());
    double lo = *fmin_it - 1.0;
    double hi = *fmax_it + 1.0;
    if (gap + 1 < cfg.thresholds.size()) lo = std::max(lo, cfg.thresholds[gap + 1]);
    if (gap > 0) hi = std::min(hi, cfg.thresholds[gap - 1]);

    auto density_at = [&](double t) {
        auto th = cfg.thresholds;
        th[gap] = t;
        return detail::flag_density(detail::refinement_flags(maxima, th, cfg.refinement_ratio)[gap]);
    };
    // Interior points only, so the strict ordering holds at the result.
    double best_t = 0.5 * (lo + hi);
    double best_err = std::abs(density_at(best_t) - target_density);
    double a = lo, b = hi;
    for (int it = 0; it < iterations; ++it) {
        const double mid = 0.5 * (a + b);
        if (!(mid > lo && mid < hi)) break;
        const double dens = density_at(mid);
        const double err = std::abs(dens - target_density);
        if (err < best_err) {
            best_err = err;
            best_t = mid;
        }
        // density is non-increasing in the threshold
        if (dens > target_density) {
            a = mid;
        } else {
            b = mid;
        }
    }
    cfg.thresholds[gap] = best_t;
    return cfg;
}

// ---------------------------------------------------------------------------
// key=value config files

namespace detail {

inline std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

/// Parsed generator config plus an optional finest-level density target, which
/// when present is reached by tuning the finest-gap threshold.
struct GenSpec {
    GenConfig config;
    std::vector<double> finest_density;  // empty or one value
};

/// Recognized keys: dims (cube side), nx, ny, nz, levels, ratio, block_size,
/// blobs, amp_min, amp_max, width_min, width_max, thresholds (comma list), seed,
/// value_type (f32|f64), finest_density. '#' starts a comment.
inline GenSpec parse_gen_config(std::istream& in) {
    GenSpec spec;
    GenConfig& c = spec.config;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        try {
            if (key == "dims") {
                c.dims.nx = c.dims.ny = c.dims.nz = std::stoul(val);
            } else if (key == "nx") {
                c.dims.nx = std::stoul(val);
            } else if (key == "ny") {
                c.dims.ny = std::stoul(val);
            } else if (key == "nz") {
                c.dims.nz = std::stoul(val);
            } else if (key == "levels") {
                c.num_levels = std::stoul(val);
            } else if (key == "ratio") {
                c.refinement_ratio = std::stoul(val);
            } else if (key == "block_size") {
                c.unit_block_size = std::stoul(val);
            } else if (key == "blobs") {
                c.num_blobs = std::stoul(val);
            } else if (key == "amp_min") {
                c.amp_min = std::stod(val);
            } else if (key == "amp_max") {
                c.amp_max = std::stod(val);
            } else if (key == "width_min") {
                c.width_min = std::stod(val);
            } else if (key == "width_max") {
                c.width_max = std::stod(val);
            } else if (key == "thresholds") {
                c.thresholds = detail::parse_list(val);
            } else if (key == "seed") {
                c.seed = std::stoull(val);
            } else if (key == "value_type") {
                if (val == "f32") {
                    c.value_type = ValueType::F32;
                } else if (val == "f64") {
                    c.value_type = ValueType::F64;
                } else {
                    throw InvalidArgument("value_type must be f32 or f64");
                }
            } else if (key == "finest_density") {
                spec.finest_density = {std::stod(val)};
            } else {
                throw InvalidArgument("unknown config key '" + key + "'");
            }
        } catch (const std::logic_error& e) {
            if (dynamic_cast<const InvalidArgument*>(&e)) throw;
            throw InvalidArgument("config line " + std::to_string(lineno) + ": bad value for '" +
                                  key + "'");
        }
    }
    validate_config(c);
    return spec;
}

/// Field + hierarchy in one step, honoring a finest-density target if given.
inline AMRDataset generate(const GenSpec& spec) {
    const auto field = gen_field(spec.config);
    GenConfig cfg = spec.config;
    if (!spec.finest_density.empty() && cfg.num_levels > 1) {
        cfg = tune_threshold(field, cfg, 0, spec.finest_density.front());
    }
    return build_amr(field, cfg);
}

}  // namespace tacplus

#endif  // TACPLUS_DATAGEN_HPP
