#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vstyle/errors.hpp"

namespace vstyle {

// Dense rank-4 float tensor: maps (s) x channels (c) x height (h) x width (w),
// row-major with w fastest. The unit every latent-space operation works on.
struct Grid4 {
    std::size_t s = 0;
    std::size_t c = 0;
    std::size_t h = 0;
    std::size_t w = 0;
    std::vector<float> data;

    Grid4() = default;
    Grid4(std::size_t s_, std::size_t c_, std::size_t h_, std::size_t w_, float fill = 0.0f);

    std::size_t size() const { return s * c * h * w; }
    std::size_t slice_count() const { return s * c; }
    std::size_t slice_size() const { return h * w; }

    float& at(std::size_t si, std::size_t ci, std::size_t y, std::size_t x) {
        return data[((si * c + ci) * h + y) * w + x];
    }
    float at(std::size_t si, std::size_t ci, std::size_t y, std::size_t x) const {
        return data[((si * c + ci) * h + y) * w + x];
    }

    // Flat (map, channel) slice access, index in [0, s*c).
    float* slice(std::size_t i) { return data.data() + i * slice_size(); }
    const float* slice(std::size_t i) const { return data.data() + i * slice_size(); }

    bool same_dims(const Grid4& o) const {
        return s == o.s && c == o.c && h == o.h && w == o.w;
    }

    // Throws ShapeError if any dim is zero or data length disagrees with dims.
    void validate() const;
};

// Per-(map, channel) spatial moments. std uses the population convention with
// a 1e-6 epsilon under the square root, so it is strictly positive.
struct ChannelStats {
    std::vector<double> mean;  // length s*c
    std::vector<double> std;   // length s*c
};

inline constexpr double kStatsEpsilon = 1e-6;

// Spatial mean and population std (plus epsilon) of every (map, channel)
// slice. Non-finite input values raise InvalidTensor.
ChannelStats channel_stats(const Grid4& x);

// Renormalizes each slice of x to the corresponding slice statistics of
// target: sigma_t * (x - mu_x) / sigma_x + mu_t. Dims must match.
Grid4 adain(const Grid4& x, const Grid4& target);

// Binary container: magic "FVG4", four little-endian u32 dims (s, c, h, w),
// then s*c*h*w little-endian f32 values. Round trip is bit-exact.
void save_grid(const Grid4& x, const std::string& path);
Grid4 load_grid(const std::string& path);

}  // namespace vstyle
