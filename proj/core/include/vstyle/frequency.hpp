#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

#include "vstyle/grid.hpp"

namespace vstyle {

// Ideal circular low-pass mask over centered 2-D frequency coordinates.
// cutoff_fraction is the fraction of the Nyquist radius that passes:
// a frequency (fy, fx) passes iff sqrt((fy/(h/2))^2 + (fx/(w/2))^2) / sqrt(2)
// <= cutoff_fraction, so 1.0 is all-pass and DC always passes.
class LowPassFilter {
public:
    LowPassFilter() = default;  // empty filter, unusable until assigned
    LowPassFilter(std::size_t h, std::size_t w, double cutoff_fraction);

    std::size_t height() const { return h_; }
    std::size_t width() const { return w_; }
    double cutoff_fraction() const { return cutoff_; }

    // ky, kx in plain FFT index order (not shifted).
    bool passes(std::size_t ky, std::size_t kx) const { return mask_[ky * w_ + kx] != 0; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }

private:
    std::size_t h_ = 0;
    std::size_t w_ = 0;
    double cutoff_ = 0.0;
    std::vector<std::uint8_t> mask_;
};

// Signed frequency for index k of an n-point transform: 0..n/2 then negative.
long signed_frequency(std::size_t k, std::size_t n);

// Per-timestep weighting of the high-frequency injection plus its active
// window [window_begin, window_end). Outside the window lambda_at is zero.
struct IhcConfig {
    std::vector<double> lambda_schedule;
    std::size_t window_begin = 0;
    std::size_t window_end = 0;
    LowPassFilter filter;

    double lambda_at(std::size_t t) const;
    // ConfigError on negative weights, a window outside the schedule, or
    // weights increasing inside the window.
    void validate() const;
};

// Splits every (map, channel) slice into complementary low/high frequency
// parts via 2-D FFT: low = F^-1(F(x) * H), high = F^-1(F(x) * (1 - H)).
// low + high = x within 1e-5. Imaginary residue above 1e-5 raises
// NumericalError; below that it is discarded.
std::pair<Grid4, Grid4> fft2_split(const Grid4& x, const LowPassFilter& f);

// x_r + lambda * (target - x_r). lambda 0 and 1 short-circuit to bit-exact
// copies of x_r and target respectively.
Grid4 reconstruction_compensate(const Grid4& x_r, const Grid4& target, double lambda);

// High-frequency-only correction of the stylization latent: aligns target and
// x_r to the channel statistics of x_s, takes the high-pass part of their
// difference, and adds lambda_at(t) times it to x_s. When lambda_at(t) is
// zero (including any t outside the window) x_s is returned bit-equal.
Grid4 ihc_compensate(const Grid4& x_s, const Grid4& x_r, const Grid4& target,
                     const IhcConfig& cfg, std::size_t t);

// Mean FFT magnitude binned by integer radial frequency, averaged over all
// (map, channel) slices. Bin count is min(h, w) / 2.
std::vector<double> spectrum_profile(const Grid4& x);

// CSV with header "bin,energy", one row per radial bin.
void write_spectrum_csv(std::ostream& os, const std::vector<double>& profile);

}  // namespace vstyle
