#include "vstyle/codec.hpp"

#include <algorithm>
#include <cmath>

#include "vstyle/errors.hpp"
#include "vstyle/rng.hpp"

namespace vstyle {

namespace {

constexpr double kLattice = 1048576.0;  // 2^20
constexpr float kLatticeF = 1048576.0f;

// Snaps to the 2^-20 lattice. Within |x| <= 8 every lattice value and every
// difference of two lattice values is exactly representable as float, which
// is what makes the add/subtract identities of this module bit-exact.
float quantize(double x) {
    const double q = std::nearbyint(x * kLattice);
    if (std::abs(q) > 8.0 * kLattice)
        throw NumericalError("codec value outside the exact lattice range");
    return static_cast<float>(q) / kLatticeF;
}

}  // namespace

SampledSequence sample_indices(std::size_t frames, std::size_t r, std::size_t delta_p) {
    if (frames == 0) throw ConfigError("sample_indices: frame count must be >= 1");
    if (r == 0) throw ConfigError("sample_indices: temporal factor must be >= 1");
    if (delta_p > r) throw ConfigError("sample_indices: offset must lie in [0, r]");
    SampledSequence out;
    out.indices.push_back(0);
    const std::size_t blocks = (frames - 1) / r;
    for (std::size_t j = 0; j < blocks; ++j) {
        const std::size_t idx = r * j + delta_p;
        if (idx >= frames) throw ConfigError("sample_indices: index exceeds frame count");
        if (idx <= out.indices.back())
            throw ConfigError("sample_indices: sequence not strictly increasing");
        out.indices.push_back(idx);
    }
    return out;
}

Grid4 take_frames(const Grid4& video, const std::vector<std::size_t>& indices) {
    video.validate();
    if (indices.empty()) throw ConfigError("take_frames: empty index list");
    Grid4 out(indices.size(), video.c, video.h, video.w);
    for (std::size_t m = 0; m < indices.size(); ++m) {
        if (indices[m] >= video.s) throw IndexError("take_frames: frame index out of range");
        const std::size_t per_map = video.c * video.h * video.w;
        std::copy_n(video.data.begin() + static_cast<long>(indices[m] * per_map), per_map,
                    out.data.begin() + static_cast<long>(m * per_map));
    }
    return out;
}

ToyCausalCodec::ToyCausalCodec(std::size_t channels, std::size_t r, std::uint64_t seed)
    : ToyCausalCodec(channels, r, seed, 0) {}

ToyCausalCodec ToyCausalCodec::planted(std::size_t channels, std::size_t r, std::uint64_t seed,
                                       std::size_t offset) {
    if (offset == 0 || offset > r)
        throw ConfigError("planted offset must lie in [1, r]");
    return ToyCausalCodec(channels, r, seed, offset);
}

ToyCausalCodec::ToyCausalCodec(std::size_t channels, std::size_t r, std::uint64_t seed,
                               std::size_t offset)
    : channels_(channels), r_(r), planted_offset_(offset) {
    if (channels == 0) throw ConfigError("codec needs at least one channel");
    if (r == 0) throw ConfigError("codec temporal factor must be >= 1");
    SeededGaussian rng(seed);
    Eigen::MatrixXd a(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(channels));
    rng.fill(a, 1.0);
    // Orthonormal mix: the decoder inverts it with a plain transpose.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    mix_ = qr.householderQ() *
           Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(channels),
                                     static_cast<Eigen::Index>(channels));
}

namespace {

void mix_pixel(const Eigen::MatrixXd& mix, const Grid4& src, std::size_t map, std::size_t y,
               std::size_t x, Eigen::VectorXd& tmp_in, Eigen::VectorXd& tmp_out) {
    for (std::size_t ch = 0; ch < src.c; ++ch)
        tmp_in(static_cast<Eigen::Index>(ch)) = static_cast<double>(src.at(map, ch, y, x));
    tmp_out.noalias() = mix * tmp_in;
}

}  // namespace

Grid4 ToyCausalCodec::encode_image(const Grid4& frames) const {
    frames.validate();
    if (frames.c != channels_) throw ShapeError("encode_image: channel count mismatch");
    Grid4 out = frames;
    Eigen::VectorXd pix(static_cast<Eigen::Index>(channels_));
    Eigen::VectorXd mixed(static_cast<Eigen::Index>(channels_));
    for (std::size_t m = 0; m < frames.s; ++m)
        for (std::size_t y = 0; y < frames.h; ++y)
            for (std::size_t x = 0; x < frames.w; ++x) {
                mix_pixel(mix_, frames, m, y, x, pix, mixed);
                for (std::size_t ch = 0; ch < channels_; ++ch)
                    out.at(m, ch, y, x) = quantize(mixed(static_cast<Eigen::Index>(ch)));
            }
    return out;
}

Grid4 ToyCausalCodec::encode_video(const Grid4& video) const {
    video.validate();
    if (video.c != channels_) throw ShapeError("encode_video: channel count mismatch");
    const std::size_t maps = 1 + (video.s - 1) / r_;
    Grid4 out(maps, video.c, video.h, video.w);
    Eigen::VectorXd pix(static_cast<Eigen::Index>(channels_));
    Eigen::VectorXd mixed(static_cast<Eigen::Index>(channels_));

    auto encode_single = [&](std::size_t frame, std::size_t map) {
        for (std::size_t y = 0; y < video.h; ++y)
            for (std::size_t x = 0; x < video.w; ++x) {
                mix_pixel(mix_, video, frame, y, x, pix, mixed);
                for (std::size_t ch = 0; ch < channels_; ++ch)
                    out.at(map, ch, y, x) = quantize(mixed(static_cast<Eigen::Index>(ch)));
            }
    };

    encode_single(0, 0);
    for (std::size_t m = 1; m < maps; ++m) {
        const std::size_t first = r_ * (m - 1) + 1;
        if (planted_offset_ != 0) {
            encode_single(r_ * (m - 1) + planted_offset_, m);
            continue;
        }
        const double inv = 1.0 / static_cast<double>(r_);
        for (std::size_t y = 0; y < video.h; ++y)
            for (std::size_t x = 0; x < video.w; ++x) {
                for (std::size_t ch = 0; ch < channels_; ++ch) {
                    double acc = 0.0;
                    for (std::size_t f = first; f < first + r_; ++f)
                        acc += static_cast<double>(video.at(f, ch, y, x));
                    pix(static_cast<Eigen::Index>(ch)) = acc * inv;
                }
                mixed.noalias() = mix_ * pix;
                for (std::size_t ch = 0; ch < channels_; ++ch)
                    out.at(m, ch, y, x) = quantize(mixed(static_cast<Eigen::Index>(ch)));
            }
    }
    return out;
}

Grid4 ToyCausalCodec::decode(const Grid4& latent) const {
    latent.validate();
    if (latent.c != channels_) throw ShapeError("decode: channel count mismatch");
    Grid4 out = latent;
    const Eigen::MatrixXd inv = mix_.transpose();
    Eigen::VectorXd pix(static_cast<Eigen::Index>(channels_));
    Eigen::VectorXd mixed(static_cast<Eigen::Index>(channels_));
    for (std::size_t m = 0; m < latent.s; ++m)
        for (std::size_t y = 0; y < latent.h; ++y)
            for (std::size_t x = 0; x < latent.w; ++x) {
                mix_pixel(inv, latent, m, y, x, pix, mixed);
                for (std::size_t ch = 0; ch < channels_; ++ch)
                    out.at(m, ch, y, x) = static_cast<float>(mixed(static_cast<Eigen::Index>(ch)));
            }
    return out;
}

Grid4 appearance(const ToyCausalCodec& codec, const Grid4& video, std::size_t delta_p) {
    const SampledSequence idx = sample_indices(video.s, codec.factor(), delta_p);
    return codec.encode_image(take_frames(video, idx.indices));
}

Grid4 dynamic_residual(const ToyCausalCodec& codec, const Grid4& video, std::size_t delta_p) {
    const Grid4 z = codec.encode_video(video);
    const Grid4 a = appearance(codec, video, delta_p);
    if (!z.same_dims(a)) throw ShapeError("dynamic_residual: latent shapes differ");
    Grid4 out = z;
    for (std::size_t j = 0; j < out.data.size(); ++j) out.data[j] = z.data[j] - a.data[j];
    return out;
}

Grid4 swap_appearance(const ToyCausalCodec& codec, const Grid4& donor, const Grid4& carrier,
                      std::size_t delta_p) {
    if (!donor.same_dims(carrier)) throw ShapeError("swap_appearance: video dims differ");
    const Grid4 dyn = dynamic_residual(codec, carrier, delta_p);
    const Grid4 app = appearance(codec, donor, delta_p);
    Grid4 sum = dyn;
    for (std::size_t j = 0; j < sum.data.size(); ++j) sum.data[j] = dyn.data[j] + app.data[j];
    return codec.decode(sum);
}

double mean_abs_loss(const Grid4& a, const Grid4& b) {
    if (!a.same_dims(b)) throw ShapeError("mean_abs_loss: dims differ");
    double acc = 0.0;
    for (std::size_t j = 0; j < a.data.size(); ++j)
        acc += std::abs(static_cast<double>(a.data[j]) - static_cast<double>(b.data[j]));
    return acc / static_cast<double>(a.data.size());
}

std::size_t select_offset(const ToyCausalCodec& codec, const Grid4& video_a,
                          const Grid4& video_b, std::size_t r, const VideoLoss& loss) {
    if (r == 0) throw ConfigError("select_offset: temporal factor must be >= 1");
    if (r != codec.factor()) throw ConfigError("select_offset: r does not match the codec");
    if (!video_a.same_dims(video_b)) throw ShapeError("select_offset: video dims differ");
    const VideoLoss& use = loss ? loss : VideoLoss(mean_abs_loss);

    bool found = false;
    std::size_t best_dp = 0;
    double best = 0.0;
    for (std::size_t dp = 0; dp <= r; ++dp) {
        SampledSequence idx;
        try {
            idx = sample_indices(video_a.s, r, dp);
        } catch (const ConfigError&) {
            continue;
        }
        const Grid4 swap_ab = swap_appearance(codec, video_b, video_a, dp);
        const Grid4 swap_ba = swap_appearance(codec, video_a, video_b, dp);
        const double total = use(swap_ab, take_frames(video_b, idx.indices)) +
                             use(swap_ba, take_frames(video_a, idx.indices));
        if (!(total >= 0.0)) throw NumericalError("select_offset: loss must be nonnegative");
        // <= prefers the larger offset on ties.
        if (!found || total <= best) {
            found = true;
            best = total;
            best_dp = dp;
        }
    }
    if (!found) throw ConfigError("select_offset: no valid offset candidate");
    return best_dp;
}

}  // namespace vstyle
