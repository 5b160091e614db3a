#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "vstyle/grid.hpp"

namespace vstyle {

// Sampled frame sequence S_r(V, delta_p): frame 0 followed by r*j + delta_p
// for j = 0 .. floor((N-1)/r) - 1. Strictly increasing.
struct SampledSequence {
    std::vector<std::size_t> indices;
};

// ConfigError when r = 0, delta_p > r, an index reaches N, or the sequence
// would repeat an index (delta_p = 0 with at least one block).
SampledSequence sample_indices(std::size_t frames, std::size_t r, std::size_t delta_p);

// New grid keeping only the given maps of video, in order.
Grid4 take_frames(const Grid4& video, const std::vector<std::size_t>& indices);

// Seeded linear blockwise codec standing in for a causal video autoencoder.
// Frames are (channels)-vectors per pixel; encoding applies an orthonormal
// channel mix and snaps to a 2^-20 lattice, so encode outputs of the video
// and image paths combine with exact float arithmetic. Decoding applies the
// transposed mix per latent map and is a framewise inverse of encode_image
// within 1e-5.
class ToyCausalCodec {
public:
    // Video encoder averages each temporal block before mixing.
    ToyCausalCodec(std::size_t channels, std::size_t r, std::uint64_t seed);

    // Video encoder reads exactly the frame at the given within-block offset
    // (1..r) instead of averaging, making the video and image encoders agree
    // bitwise on those frames.
    static ToyCausalCodec planted(std::size_t channels, std::size_t r, std::uint64_t seed,
                                  std::size_t offset);

    std::size_t channels() const { return channels_; }
    std::size_t factor() const { return r_; }

    // N frames -> 1 + floor((N-1)/r) latent maps: map 0 from frame 0, map m
    // from the block of frames r(m-1)+1 .. rm. Trailing frames beyond the
    // last full block are ignored.
    Grid4 encode_video(const Grid4& video) const;

    // Framewise: every map encoded independently.
    Grid4 encode_image(const Grid4& frames) const;

    // Framewise inverse mix, one frame per latent map.
    Grid4 decode(const Grid4& latent) const;

private:
    ToyCausalCodec(std::size_t channels, std::size_t r, std::uint64_t seed, std::size_t offset);

    std::size_t channels_;
    std::size_t r_;
    std::size_t planted_offset_;  // 0 = average blend
    Eigen::MatrixXd mix_;         // orthonormal channels x channels
};

// Per-frame appearance latents: image encodings of the sampled frames.
Grid4 appearance(const ToyCausalCodec& codec, const Grid4& video, std::size_t delta_p);

// z_dyn(V, delta_p) = encode_video(V) - appearance(V, delta_p); the identity
// z = a + z_dyn is exact in float arithmetic.
Grid4 dynamic_residual(const ToyCausalCodec& codec, const Grid4& video, std::size_t delta_p);

// Decoded carrier dynamics with donor appearance:
// D(z_dyn(carrier) + a(donor)).
Grid4 swap_appearance(const ToyCausalCodec& codec, const Grid4& donor, const Grid4& carrier,
                      std::size_t delta_p);

using VideoLoss = std::function<double(const Grid4&, const Grid4&)>;

// Mean absolute difference over all values; the default select_offset loss.
double mean_abs_loss(const Grid4& a, const Grid4& b);

// Picks delta_p in {0..r} minimizing the summed cross-reconstruction error
// of both swap directions against the donor originals at the sampled
// frames. Candidates whose sampled sequence is invalid are skipped; ties
// break toward larger delta_p. All candidates invalid is a ConfigError.
std::size_t select_offset(const ToyCausalCodec& codec, const Grid4& video_a,
                          const Grid4& video_b, std::size_t r, const VideoLoss& loss = {});

}  // namespace vstyle
