#ifndef TACPLUS_TESTS_SUPPORT_HPP
#define TACPLUS_TESTS_SUPPORT_HPP

#include <random>

#include "tacplus/tacplus.hpp"

namespace tacplus::testing {

inline Array3<std::uint8_t> random_flags(std::mt19937_64& rng, Dims3 d, double p) {
    std::bernoulli_distribution on(p);
    Array3<std::uint8_t> f(d, 0);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = on(rng) ? 1 : 0;
    return f;
}

/// Level whose occupied cells hold smooth, nonzero values.
inline AMRLevel level_from_flags(const Array3<std::uint8_t>& flags, std::size_t b, int index = 0,
                                 std::uint64_t seed = 7) {
    AMRLevel l;
    l.level_index = index;
    l.unit_block_size = b;
    l.occupancy = expand_block_flags(flags, b);
    l.values = Array3<double>(l.occupancy.dims(), 0.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-0.05, 0.05);
    const auto& d = l.values.dims();
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                const std::size_t i = l.values.index(x, y, z);
                if (l.occupancy[i]) {
                    l.values[i] = 3.0 + std::sin(0.3 * x) * std::cos(0.2 * y) + 0.1 * z + noise(rng);
                    if (l.values[i] == 0.0) l.values[i] = 1.0;
                }
            }
    return l;
}

/// Two-level dataset: fine level from `fine_flags`, coarse level covering the rest.
inline AMRDataset two_level(const Array3<std::uint8_t>& fine_flags, std::size_t b,
                            ValueType vt = ValueType::F64) {
    const Dims3 fd = fine_flags.dims();
    if (fd.nx % 2 || fd.ny % 2 || fd.nz % 2) throw std::logic_error("fine block dims must be even");
    const std::size_t cb = b / 2;
    // Coarse blocks of side b/2 over a half-resolution grid: one coarse block per fine block.
    Array3<std::uint8_t> coarse_flags(fd, 0);
    for (std::size_t i = 0; i < fine_flags.size(); ++i) coarse_flags[i] = fine_flags[i] ? 0 : 1;
    AMRDataset ds;
    ds.refinement_ratio = 2;
    ds.value_type = vt;
    ds.levels.push_back(level_from_flags(fine_flags, b, 0, 11));
    ds.levels.push_back(level_from_flags(coarse_flags, cb, 1, 12));
    for (auto& l : ds.levels)
        for (auto& v : l.values.vec()) v = round_to(vt, v);
    return ds;
}

}  // namespace tacplus::testing

#endif  // TACPLUS_TESTS_SUPPORT_HPP
