#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "vstyle/flow.hpp"
#include "vstyle/grid.hpp"

namespace vstyle::test {

inline Grid4 random_grid(std::size_t s, std::size_t c, std::size_t h, std::size_t w,
                         std::uint64_t seed, float scale = 1.0f) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    Grid4 g(s, c, h, w);
    for (float& v : g.data) v = dist(rng) * scale;
    return g;
}

inline double max_abs_diff(const Grid4& a, const Grid4& b) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.data.size(); ++j)
        m = std::max(m, std::abs(static_cast<double>(a.data[j]) -
                                 static_cast<double>(b.data[j])));
    return m;
}

inline bool bit_equal(const Grid4& a, const Grid4& b) {
    return a.same_dims(b) && a.data == b.data;
}

// Smooth sub-2px sinusoidal displacement fields with seeded coefficients;
// forward and backward are independent draws (consistency is not required by
// any traced contract).
inline FlowFieldSequence random_smooth_flows(std::size_t frames, std::size_t h, std::size_t w,
                                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-1.7, 1.7);
    std::uniform_real_distribution<double> phase(0.0, 6.28);
    FlowFieldSequence f = FlowFieldSequence::zero(frames, h, w);
    const double two_pi = 2.0 * std::acos(-1.0);
    for (auto* group : {&f.forward, &f.backward})
        for (FlowField& field : *group) {
            const double ay = amp(rng), ax = amp(rng);
            const double py = phase(rng), px = phase(rng);
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x)
                    field.set(y, x,
                              static_cast<float>(ay * std::sin(two_pi * y / h + py) *
                                                 std::cos(two_pi * x / w + px)),
                              static_cast<float>(ax * std::cos(two_pi * y / h + px) *
                                                 std::sin(two_pi * x / w + py)));
        }
    return f;
}

}  // namespace vstyle::test
