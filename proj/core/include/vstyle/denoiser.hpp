#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "vstyle/attention.hpp"
#include "vstyle/grid.hpp"

namespace vstyle {

// Anything that predicts a velocity field for a latent grid at a noise level.
class VelocityModel {
public:
    virtual ~VelocityModel() = default;
    virtual Grid4 velocity(const Grid4& x, double sigma) const = 0;
};

// Per-block attention strategy plugged into the denoiser. `main` covers the
// conditioning block (when references are present, the first reference's
// tokens) followed by the map tokens, row-major (y, x) within each map;
// `refs` covers the remaining references in order. Implementations return
// the attention outputs for both row groups.
class BlockAttention {
public:
    virtual ~BlockAttention() = default;
    virtual std::pair<Eigen::MatrixXd, Eigen::MatrixXd> self_attention(std::size_t block,
                                                                       const Qkv& main,
                                                                       const Qkv& refs) = 0;
    virtual std::pair<Eigen::MatrixXd, Eigen::MatrixXd> cross_attention(
        std::size_t block, const Eigen::MatrixXd& q_main, const Eigen::MatrixXd& q_refs,
        const std::vector<Eigen::MatrixXd>& ref_embeddings) = 0;
};

// Reconstruction-side behavior: main rows attend only among themselves,
// reference rows attend over everything, cross-attention is plain attention
// over the concatenated reference embeddings.
class IsolatedBlockAttention : public BlockAttention {
public:
    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> self_attention(std::size_t block, const Qkv& main,
                                                               const Qkv& refs) override;
    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> cross_attention(
        std::size_t block, const Eigen::MatrixXd& q_main, const Eigen::MatrixXd& q_refs,
        const std::vector<Eigen::MatrixXd>& ref_embeddings) override;
};

struct DenoiserParams {
    std::size_t channels = 4;
    std::size_t height = 16;
    std::size_t width = 16;
    std::size_t patch_y = 2;
    std::size_t patch_x = 2;
    std::size_t blocks = 2;
    std::size_t d_model = 16;
    double head_gain = 0.15;
    std::uint64_t seed = 0;
};

// Seeded, untrained transformer over patch tokens with spatial positional
// embeddings and sigma conditioning. Deterministic for a fixed seed; never
// produces the same output for different inputs by construction of the
// seeded weights. Attention behavior is supplied per call.
class ToyDenoiser : public VelocityModel {
public:
    explicit ToyDenoiser(const DenoiserParams& p);

    const DenoiserParams& params() const { return params_; }
    std::size_t tokens_high() const { return params_.height / params_.patch_y; }
    std::size_t tokens_wide() const { return params_.width / params_.patch_x; }
    std::size_t tokens_per_map() const { return tokens_high() * tokens_wide(); }

    // Unconditioned mode used during inversion: no reference tokens, no
    // cross-attention, plain self-attention.
    Grid4 velocity(const Grid4& x, double sigma) const override;

    // Full forward pass. refs (may be null for the unconditioned mode) holds
    // the clean reference latents, one map per reference; the first becomes
    // the in-sequence conditioning block, the rest the reference-token group.
    Grid4 forward(const Grid4& x, double sigma, const Grid4* refs, BlockAttention& hooks) const;

private:
    struct Block {
        Eigen::VectorXd ln1_g, ln1_b;
        Eigen::MatrixXd w_q, w_k, w_v, w_o;
        Eigen::VectorXd lnc_g, lnc_b;
        Eigen::MatrixXd w_cq, w_ce, w_co;
        Eigen::VectorXd ln2_g, ln2_b;
        Eigen::MatrixXd w_m1, w_m2;
        Eigen::VectorXd b_m1, b_m2;
    };

    Eigen::MatrixXd embed_maps(const Grid4& g, double sigma) const;
    Eigen::MatrixXd embed_reference(const Grid4& refs, std::size_t index) const;

    DenoiserParams params_;
    Eigen::MatrixXd w_patch_;
    Eigen::VectorXd b_patch_;
    Eigen::MatrixXd pos_row_, pos_col_;
    Eigen::VectorXd w_sigma_;
    Eigen::MatrixXd w_emb_;
    std::vector<Block> blocks_;
    Eigen::VectorXd lnf_g_, lnf_b_;
    Eigen::MatrixXd w_head_;
    Eigen::VectorXd b_head_;
};

}  // namespace vstyle
