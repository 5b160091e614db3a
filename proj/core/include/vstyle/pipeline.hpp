#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "vstyle/attention.hpp"
#include "vstyle/codec.hpp"
#include "vstyle/denoiser.hpp"
#include "vstyle/flow.hpp"
#include "vstyle/grid.hpp"
#include "vstyle/run_config.hpp"
#include "vstyle/schedule.hpp"

namespace vstyle {

// Latents recorded during inversion, noisiest first: states[i] belongs to
// sigmas[i], so states.front() is x_T and states.back() is x_0.
struct Trajectory {
    std::vector<Grid4> states;
};

// Recovers the noise latent for x0 under the model's velocity field by
// solving each implicit Euler step with fixed-point iteration (iterations
// passes seeded at the less-noisy state). sigmas must descend 1 -> 0.
// Returns (x_T, full trajectory). iterations = 0 is a ConfigError;
// non-finite iterates raise NumericalError.
std::pair<Grid4, Trajectory> euler_invert(const VelocityModel& model, const Grid4& x0,
                                          const std::vector<double>& sigmas,
                                          std::size_t iterations);

// Plain explicit Euler sampling from x_T down the same sigma grid.
Grid4 euler_denoise(const VelocityModel& model, const Grid4& x_T,
                    const std::vector<double>& sigmas);

// Reference frames for a policy, snapped to the nearest sampled frame (ties
// toward the smaller). map_index gives each frame's position in the sampled
// sequence. Snapping collisions are ConfigError.
struct ReferenceSet {
    std::vector<std::size_t> frames;
    std::vector<std::size_t> map_index;
};

ReferenceSet arrange_references(std::size_t frames, std::size_t r, std::size_t delta_p,
                                ReferencePolicy policy);

struct StylizeInputs {
    Grid4 content;            // full video: frames maps of channels x h x w
    FlowFieldSequence flows;
    Grid4 style;              // stylized full video, same dims
};

struct StylizeResult {
    Grid4 stylized;                       // sampled-map latents after the loop
    Grid4 reconstruction;
    Grid4 inverted;                       // x_T of the content latents
    Trajectory trajectory;
    std::vector<Grid4> recon_steps;       // post-compensation x^r per step
    CorrespondenceMask flow_mask_dilated;  // pixel level
    ReferenceMask ref_masks;               // pixel level
    std::vector<std::size_t> ref_frames;
    std::vector<std::size_t> sampled_frames;
};

// The full two-branch guided loop: inverts the sampled content latents,
// builds flow and reference masks (pooled to token resolution), then walks
// the sigma grid with the reconstruction branch feeding queries/keys and
// trajectory compensation into the stylization branch.
StylizeResult run_stylize(const RunConfig& cfg, const StylizeInputs& in);

// Frame-block attention diagnostics of a bare forward pass at the given
// sigma: block-0 self-attention weights over the map tokens, averaged per
// frame pair, plus the spatial weight grids of the query token.
AttentionDiagnostics diagnose_attention(const ToyDenoiser& den, const Grid4& latents,
                                        const std::vector<std::size_t>& frame_ids, double sigma,
                                        const DiagQuery& query);

}  // namespace vstyle
