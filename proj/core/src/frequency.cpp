#include "vstyle/frequency.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <iomanip>
#include <limits>

#include "vstyle/errors.hpp"

namespace vstyle {

long signed_frequency(std::size_t k, std::size_t n) {
    const auto kl = static_cast<long>(k);
    const auto nl = static_cast<long>(n);
    return kl <= (nl - 1) / 2 ? kl : kl - nl;
}

LowPassFilter::LowPassFilter(std::size_t h, std::size_t w, double cutoff_fraction)
    : h_(h), w_(w), cutoff_(cutoff_fraction) {
    if (h < 2 || w < 2) throw ShapeError("low-pass filter requires h, w >= 2");
    if (!(cutoff_fraction > 0.0) || cutoff_fraction > 1.0)
        throw ConfigError("cutoff_fraction must lie in (0, 1]");
    mask_.assign(h * w, 0);
    const double half_h = static_cast<double>(h) / 2.0;
    const double half_w = static_cast<double>(w) / 2.0;
    const double limit = 2.0 * cutoff_ * cutoff_;
    for (std::size_t ky = 0; ky < h; ++ky) {
        const double ny = static_cast<double>(signed_frequency(ky, h)) / half_h;
        for (std::size_t kx = 0; kx < w; ++kx) {
            const double nx = static_cast<double>(signed_frequency(kx, w)) / half_w;
            if (ny * ny + nx * nx <= limit) mask_[ky * w + kx] = 1;
        }
    }
}

double IhcConfig::lambda_at(std::size_t t) const {
    if (t < window_begin || t >= window_end || t >= lambda_schedule.size()) return 0.0;
    return lambda_schedule[t];
}

void IhcConfig::validate() const {
    if (window_end > lambda_schedule.size() || window_begin > window_end)
        throw ConfigError("ihc window must lie within the lambda schedule");
    for (double v : lambda_schedule)
        if (!(v >= 0.0)) throw ConfigError("lambda weights must be >= 0");
    for (std::size_t t = window_begin; t + 1 < window_end; ++t)
        if (lambda_schedule[t + 1] > lambda_schedule[t])
            throw ConfigError("lambda must be non-increasing inside the window");
}

namespace {

// In-place complex 2-D transform pair reused across (map, channel) slices.
class Fft2d {
public:
    Fft2d(std::size_t h, std::size_t w)
        : h_(h), w_(w), n_(h * w), buf_(fftw_alloc_complex(n_)) {
        if (buf_ == nullptr) throw NumericalError("fftw allocation failed");
        fwd_ = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), buf_, buf_,
                                FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), buf_, buf_,
                                FFTW_BACKWARD, FFTW_ESTIMATE);
        if (fwd_ == nullptr || bwd_ == nullptr) {
            fftw_free(buf_);
            throw NumericalError("fftw planning failed");
        }
    }
    Fft2d(const Fft2d&) = delete;
    Fft2d& operator=(const Fft2d&) = delete;
    ~Fft2d() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }

    void forward(const float* src, std::vector<std::complex<double>>& freq) {
        for (std::size_t j = 0; j < n_; ++j) {
            buf_[j][0] = static_cast<double>(src[j]);
            buf_[j][1] = 0.0;
        }
        fftw_execute(fwd_);
        freq.resize(n_);
        for (std::size_t j = 0; j < n_; ++j) freq[j] = {buf_[j][0], buf_[j][1]};
    }

    // Inverse transform of freq, normalized by n; writes the real part into
    // dst and returns the largest absolute imaginary residue.
    double inverse_real(const std::vector<std::complex<double>>& freq, float* dst) {
        for (std::size_t j = 0; j < n_; ++j) {
            buf_[j][0] = freq[j].real();
            buf_[j][1] = freq[j].imag();
        }
        fftw_execute(bwd_);
        const double scale = 1.0 / static_cast<double>(n_);
        double residue = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            dst[j] = static_cast<float>(buf_[j][0] * scale);
            residue = std::max(residue, std::abs(buf_[j][1] * scale));
        }
        return residue;
    }

private:
    std::size_t h_;
    std::size_t w_;
    std::size_t n_;
    fftw_complex* buf_;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

Grid4 subtract(const Grid4& a, const Grid4& b) {
    Grid4 out = a;
    for (std::size_t j = 0; j < out.data.size(); ++j)
        out.data[j] = static_cast<float>(static_cast<double>(a.data[j]) -
                                         static_cast<double>(b.data[j]));
    return out;
}

}  // namespace

std::pair<Grid4, Grid4> fft2_split(const Grid4& x, const LowPassFilter& f) {
    x.validate();
    if (x.h < 2 || x.w < 2) throw ShapeError("fft2_split requires h, w >= 2");
    if (f.height() != x.h || f.width() != x.w)
        throw ShapeError("filter dims do not match grid dims");

    Grid4 low = x;
    Grid4 high = x;
    Fft2d fft(x.h, x.w);
    std::vector<std::complex<double>> freq;
    std::vector<std::complex<double>> part(x.slice_size());
    const auto& mask = f.mask();
    for (std::size_t i = 0; i < x.slice_count(); ++i) {
        fft.forward(x.slice(i), freq);
        for (std::size_t j = 0; j < part.size(); ++j)
            part[j] = mask[j] ? freq[j] : std::complex<double>(0.0, 0.0);
        double residue = fft.inverse_real(part, low.slice(i));
        for (std::size_t j = 0; j < part.size(); ++j)
            part[j] = mask[j] ? std::complex<double>(0.0, 0.0) : freq[j];
        residue = std::max(residue, fft.inverse_real(part, high.slice(i)));
        if (residue >= 1e-5)
            throw NumericalError("fft2_split imaginary residue above 1e-5");
    }
    return {std::move(low), std::move(high)};
}

Grid4 reconstruction_compensate(const Grid4& x_r, const Grid4& target, double lambda) {
    if (!x_r.same_dims(target)) throw ShapeError("reconstruction_compensate: dims mismatch");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (lambda == 0.0) return x_r;
    if (lambda == 1.0) return target;
    Grid4 out = x_r;
    for (std::size_t j = 0; j < out.data.size(); ++j) {
        const double r = x_r.data[j];
        out.data[j] = static_cast<float>(r + lambda * (static_cast<double>(target.data[j]) - r));
    }
    return out;
}

Grid4 ihc_compensate(const Grid4& x_s, const Grid4& x_r, const Grid4& target,
                     const IhcConfig& cfg, std::size_t t) {
    if (!x_s.same_dims(x_r) || !x_s.same_dims(target))
        throw ShapeError("ihc_compensate: dims mismatch");
    cfg.validate();
    const double lambda = cfg.lambda_at(t);
    if (lambda == 0.0) return x_s;

    const Grid4 aligned_target = adain(target, x_s);
    const Grid4 aligned_recon = adain(x_r, x_s);
    const Grid4 diff = subtract(aligned_target, aligned_recon);
    const Grid4 high = fft2_split(diff, cfg.filter).second;

    Grid4 out = x_s;
    for (std::size_t j = 0; j < out.data.size(); ++j)
        out.data[j] = static_cast<float>(static_cast<double>(x_s.data[j]) +
                                         lambda * static_cast<double>(high.data[j]));
    return out;
}

std::vector<double> spectrum_profile(const Grid4& x) {
    x.validate();
    if (x.h < 2 || x.w < 2) throw ShapeError("spectrum_profile requires h, w >= 2");
    const std::size_t bins = std::min(x.h, x.w) / 2;

    std::vector<std::size_t> bin_of(x.slice_size());
    std::vector<std::size_t> counts(bins, 0);
    for (std::size_t ky = 0; ky < x.h; ++ky) {
        const double fy = static_cast<double>(signed_frequency(ky, x.h));
        for (std::size_t kx = 0; kx < x.w; ++kx) {
            const double fx = static_cast<double>(signed_frequency(kx, x.w));
            auto b = static_cast<std::size_t>(std::lround(std::sqrt(fy * fy + fx * fx)));
            if (b >= bins) b = bins - 1;
            bin_of[ky * x.w + kx] = b;
            ++counts[b];
        }
    }

    std::vector<double> sums(bins, 0.0);
    Fft2d fft(x.h, x.w);
    std::vector<std::complex<double>> freq;
    for (std::size_t i = 0; i < x.slice_count(); ++i) {
        fft.forward(x.slice(i), freq);
        for (std::size_t j = 0; j < freq.size(); ++j) sums[bin_of[j]] += std::abs(freq[j]);
    }
    for (std::size_t b = 0; b < bins; ++b)
        sums[b] /= static_cast<double>(counts[b] * x.slice_count());
    return sums;
}

void write_spectrum_csv(std::ostream& os, const std::vector<double>& profile) {
    os << "bin,energy\n";
    os << std::setprecision(17);
    for (std::size_t b = 0; b < profile.size(); ++b) os << b << ',' << profile[b] << '\n';
}

}  // namespace vstyle
