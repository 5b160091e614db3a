#include "vstyle/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "vstyle/frequency.hpp"

namespace vstyle {

namespace {

void check_sigmas(const std::vector<double>& sigmas) {
    if (sigmas.size() < 2) throw ConfigError("sigma grid needs at least two levels");
    for (std::size_t i = 0; i + 1 < sigmas.size(); ++i)
        if (!(sigmas[i + 1] < sigmas[i]))
            throw ConfigError("sigma grid must be strictly decreasing");
}

void check_finite(const Grid4& g, const char* what) {
    for (float v : g.data)
        if (!std::isfinite(v)) throw NumericalError(std::string(what) + " produced a non-finite latent");
}

// x + dsig * v, accumulated in double per element.
Grid4 euler_step(const Grid4& x, const Grid4& v, double dsig) {
    if (!x.same_dims(v)) throw ShapeError("euler step: velocity dims mismatch");
    Grid4 out = x;
    for (std::size_t j = 0; j < out.data.size(); ++j)
        out.data[j] = static_cast<float>(static_cast<double>(x.data[j]) +
                                         dsig * static_cast<double>(v.data[j]));
    return out;
}

std::size_t snap_to_sampled(const std::vector<std::size_t>& sampled, std::size_t target) {
    std::size_t best = 0;
    std::size_t best_dist = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < sampled.size(); ++i) {
        const std::size_t d = sampled[i] > target ? sampled[i] - target : target - sampled[i];
        if (d < best_dist) {
            best = i;
            best_dist = d;
        }
    }
    return best;
}

// Reconstruction-side hooks that also record each block's projections so the
// stylization pass can reuse them (QK sharing).
class CaptureBlockAttention : public IsolatedBlockAttention {
public:
    explicit CaptureBlockAttention(std::size_t blocks)
        : main_(blocks), refs_(blocks), cross_main_(blocks), cross_refs_(blocks) {}

    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> self_attention(std::size_t block, const Qkv& main,
                                                               const Qkv& refs) override {
        at(block);
        main_[block] = main;
        refs_[block] = refs;
        return IsolatedBlockAttention::self_attention(block, main, refs);
    }

    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> cross_attention(
        std::size_t block, const Eigen::MatrixXd& q_main, const Eigen::MatrixXd& q_refs,
        const std::vector<Eigen::MatrixXd>& ref_embeddings) override {
        at(block);
        cross_main_[block] = q_main;
        cross_refs_[block] = q_refs;
        return IsolatedBlockAttention::cross_attention(block, q_main, q_refs, ref_embeddings);
    }

    const Qkv& main(std::size_t block) const { return main_[at(block)]; }
    const Qkv& refs(std::size_t block) const { return refs_[at(block)]; }
    const Eigen::MatrixXd& cross_main(std::size_t block) const { return cross_main_[at(block)]; }
    const Eigen::MatrixXd& cross_refs(std::size_t block) const { return cross_refs_[at(block)]; }

private:
    std::size_t at(std::size_t block) const {
        if (block >= main_.size()) throw IndexError("attention block index out of range");
        return block;
    }

    std::vector<Qkv> main_;
    std::vector<Qkv> refs_;
    std::vector<Eigen::MatrixXd> cross_main_;
    std::vector<Eigen::MatrixXd> cross_refs_;
};

// Stylization-side hooks: masked outputs against the captured reconstruction
// projections, dynamics-injected reference values, and reconstruction-query
// cross-attention over the branch's own reference embeddings.
class StyleBlockAttention : public BlockAttention {
public:
    StyleBlockAttention(const CaptureBlockAttention& cap, const AttentionMask& m_ref,
                        const AttentionMask& m_combined, const std::vector<std::size_t>& ref_indices,
                        double xi, double beta, double gamma)
        : cap_(cap),
          m_ref_(m_ref),
          m_combined_(m_combined),
          ref_indices_(ref_indices),
          xi_(xi),
          beta_(beta),
          gamma_(gamma) {}

    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> self_attention(std::size_t block, const Qkv& main,
                                                               const Qkv& refs) override {
        BranchTokens bt;
        bt.recon = cap_.main(block);
        bt.recon_refs = cap_.refs(block);
        bt.style = main;
        bt.style_refs = refs;
        bt.ref_indices = ref_indices_;
        if (bt.recon.q.rows() != main.q.rows() || bt.recon_refs.q.rows() != refs.q.rows())
            throw ShapeError("style attention: branch token counts differ");

        const TokenMatrix injected = inject_dynamics(bt, xi_);
        TokenMatrix o1v = out1(bt, m_ref_, injected);
        TokenMatrix agg;
        if (beta_ == 0.0 && gamma_ == 0.0) {
            agg = std::move(o1v);
        } else {
            const TokenMatrix o2v = beta_ > 0.0 ? out2(bt, m_ref_, injected) : o1v;
            const TokenMatrix o3v = gamma_ > 0.0 ? out3(bt, m_combined_, injected) : o1v;
            agg = aggregate(o1v, o2v, o3v, beta_, gamma_);
        }

        const auto n_main = static_cast<Eigen::Index>(main.q.rows());
        const auto n_ref = static_cast<Eigen::Index>(refs.q.rows());
        Eigen::MatrixXd main_out = agg.tokens.topRows(n_main);
        Eigen::MatrixXd ref_out = agg.tokens.bottomRows(n_ref);
        return {std::move(main_out), std::move(ref_out)};
    }

    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> cross_attention(
        std::size_t block, const Eigen::MatrixXd& q_main, const Eigen::MatrixXd& q_refs,
        const std::vector<Eigen::MatrixXd>& ref_embeddings) override {
        const Eigen::MatrixXd& shared_main = cap_.cross_main(block);
        const Eigen::MatrixXd& shared_refs = cap_.cross_refs(block);
        if (shared_main.rows() != q_main.rows() || shared_refs.rows() != q_refs.rows())
            throw ShapeError("style cross-attention: branch token counts differ");
        TokenMatrix qm;
        qm.tokens = shared_main;
        Eigen::MatrixXd main_out = cross_attention_concat(qm, ref_embeddings).tokens;
        Eigen::MatrixXd ref_out(0, q_main.cols());
        if (q_refs.rows() > 0) {
            TokenMatrix qr;
            qr.tokens = shared_refs;
            ref_out = cross_attention_concat(qr, ref_embeddings).tokens;
        }
        return {std::move(main_out), std::move(ref_out)};
    }

private:
    const CaptureBlockAttention& cap_;
    const AttentionMask& m_ref_;
    const AttentionMask& m_combined_;
    const std::vector<std::size_t>& ref_indices_;
    double xi_;
    double beta_;
    double gamma_;
};

// Static description of the guided token sequence: conditioning block, then
// the sampled maps, then the extra references' token groups.
struct TokenLayout {
    std::size_t th = 0;
    std::size_t tw = 0;
    std::size_t n_tok = 0;
    std::size_t n_cond = 0;
    std::size_t n_main = 0;
    std::size_t n_ref = 0;
    std::size_t n_all = 0;
    std::vector<std::size_t> map_of;  // per sequence token, sampled-map index
    std::vector<std::size_t> pos_of;  // per sequence token, within-map token id
};

TokenLayout build_layout(std::size_t th, std::size_t tw, std::size_t n_maps,
                         const ReferenceSet& ref) {
    TokenLayout lay;
    lay.th = th;
    lay.tw = tw;
    lay.n_tok = th * tw;
    lay.n_cond = lay.n_tok;
    lay.n_main = lay.n_cond + n_maps * lay.n_tok;
    lay.n_ref = (ref.frames.size() - 1) * lay.n_tok;
    lay.n_all = lay.n_main + lay.n_ref;
    lay.map_of.resize(lay.n_all);
    lay.pos_of.resize(lay.n_all);
    for (std::size_t a = 0; a < lay.n_all; ++a) {
        if (a < lay.n_cond) {
            lay.map_of[a] = ref.map_index[0];
            lay.pos_of[a] = a;
        } else if (a < lay.n_main) {
            lay.map_of[a] = (a - lay.n_cond) / lay.n_tok;
            lay.pos_of[a] = (a - lay.n_cond) % lay.n_tok;
        } else {
            const std::size_t slot = 1 + (a - lay.n_main) / lay.n_tok;
            lay.map_of[a] = ref.map_index[slot];
            lay.pos_of[a] = (a - lay.n_main) % lay.n_tok;
        }
    }
    return lay;
}

// Per-column permission under the reference-novelty rule: main-sequence
// columns and the first reference always pass, later references only where
// their pooled novel mask is set.
std::vector<std::uint8_t> column_permissions(const TokenLayout& lay,
                                             const ReferenceMask& pooled_ref) {
    std::vector<std::uint8_t> ok(lay.n_all, 1);
    for (std::size_t a = lay.n_main; a < lay.n_all; ++a) {
        const std::size_t slot = 1 + (a - lay.n_main) / lay.n_tok;
        ok[a] = pooled_ref.masks[slot][lay.pos_of[a]] != 0 ? 1 : 0;
    }
    return ok;
}

AttentionMask build_ref_mask(const TokenLayout& lay, const std::vector<std::uint8_t>& col_ok) {
    AttentionMask m(lay.n_main, lay.n_all, true);
    for (std::size_t c = lay.n_main; c < lay.n_all; ++c)
        if (!col_ok[c])
            for (std::size_t r = 0; r < lay.n_main; ++r) m.set(r, c, false);
    return m;
}

AttentionMask build_combined_mask(const TokenLayout& lay, const CorrespondenceMask& pooled_flow,
                                  std::size_t n_maps, const std::vector<std::uint8_t>& col_ok) {
    if (pooled_flow.frames != n_maps || pooled_flow.h != lay.th || pooled_flow.w != lay.tw)
        throw ShapeError("pooled flow mask dims do not match the token layout");
    const std::size_t nt = n_maps * lay.n_tok;
    std::vector<std::uint8_t> flow_ok(nt * nt, 0);
    for (const MaskEntry& e : pooled_flow.entries) {
        const std::size_t a = static_cast<std::size_t>(e.s) * lay.n_tok +
                              static_cast<std::size_t>(e.y) * lay.tw + e.x;
        const std::size_t b = static_cast<std::size_t>(e.t) * lay.n_tok +
                              static_cast<std::size_t>(e.y2) * lay.tw + e.x2;
        flow_ok[a * nt + b] = 1;
    }
    AttentionMask m(lay.n_all, lay.n_all, false);
    for (std::size_t q = 0; q < lay.n_all; ++q) {
        const std::size_t qa = lay.map_of[q] * lay.n_tok + lay.pos_of[q];
        for (std::size_t k = 0; k < lay.n_all; ++k) {
            if (!col_ok[k]) continue;
            const std::size_t kb = lay.map_of[k] * lay.n_tok + lay.pos_of[k];
            if (flow_ok[qa * nt + kb]) m.set(q, k, true);
        }
    }
    return m;
}

}  // namespace

std::pair<Grid4, Trajectory> euler_invert(const VelocityModel& model, const Grid4& x0,
                                          const std::vector<double>& sigmas,
                                          std::size_t iterations) {
    if (iterations == 0) throw ConfigError("fixed-point iteration count must be >= 1");
    check_sigmas(sigmas);
    x0.validate();
    check_finite(x0, "inversion input");

    Trajectory traj;
    traj.states.resize(sigmas.size());
    traj.states.back() = x0;
    for (std::size_t i = sigmas.size() - 1; i > 0; --i) {
        const Grid4& lower = traj.states[i];
        const double sigma_hi = sigmas[i - 1];
        const double dsig = sigma_hi - sigmas[i];
        Grid4 y = lower;
        for (std::size_t k = 0; k < iterations; ++k) {
            const Grid4 v = model.velocity(y, sigma_hi);
            y = euler_step(lower, v, dsig);
            check_finite(y, "inversion");
        }
        traj.states[i - 1] = std::move(y);
    }
    return {traj.states.front(), std::move(traj)};
}

Grid4 euler_denoise(const VelocityModel& model, const Grid4& x_T,
                    const std::vector<double>& sigmas) {
    check_sigmas(sigmas);
    x_T.validate();
    Grid4 x = x_T;
    for (std::size_t i = 0; i + 1 < sigmas.size(); ++i) {
        const Grid4 v = model.velocity(x, sigmas[i]);
        x = euler_step(x, v, sigmas[i + 1] - sigmas[i]);
        check_finite(x, "denoising");
    }
    return x;
}

ReferenceSet arrange_references(std::size_t frames, std::size_t r, std::size_t delta_p,
                                ReferencePolicy policy) {
    const SampledSequence sampled = sample_indices(frames, r, delta_p);

    std::vector<std::size_t> targets;
    switch (policy) {
        case ReferencePolicy::kFirstOnly:
            targets = {0};
            break;
        case ReferencePolicy::kFirstMidLast:
            targets = {0, (frames - 1) / 2, frames - 1};
            break;
        case ReferencePolicy::kAllSampled:
            targets = sampled.indices;
            break;
    }

    ReferenceSet out;
    for (std::size_t t : targets) {
        const std::size_t idx = snap_to_sampled(sampled.indices, t);
        if (!out.map_index.empty() && idx == out.map_index.back())
            throw ConfigError("reference frames collide after snapping to the sampled sequence");
        out.frames.push_back(sampled.indices[idx]);
        out.map_index.push_back(idx);
    }
    return out;
}

StylizeResult run_stylize(const RunConfig& cfg, const StylizeInputs& in) {
    cfg.validate();
    in.content.validate();
    in.style.validate();
    in.flows.validate();
    if (in.content.s != cfg.frames || in.content.c != cfg.channels ||
        in.content.h != cfg.height || in.content.w != cfg.width)
        throw ShapeError("content dims do not match the configuration");
    if (!in.style.same_dims(in.content))
        throw ShapeError("stylized video dims do not match the content");
    if (in.flows.frames != cfg.frames || in.flows.h != cfg.height || in.flows.w != cfg.width)
        throw ShapeError("flow dims do not match the content");

    const GuidanceSchedule sched = make_schedule(cfg.schedule);
    sched.validate();

    DenoiserParams dp;
    dp.channels = cfg.channels;
    dp.height = cfg.height;
    dp.width = cfg.width;
    dp.patch_y = cfg.patch_y;
    dp.patch_x = cfg.patch_x;
    dp.blocks = cfg.model_blocks;
    dp.d_model = cfg.d_model;
    dp.seed = cfg.model_seed;
    const ToyDenoiser den(dp);

    StylizeResult res;
    const SampledSequence sampled = sample_indices(cfg.frames, cfg.r, cfg.delta_p);
    res.sampled_frames = sampled.indices;
    const ReferenceSet refs = arrange_references(cfg.frames, cfg.r, cfg.delta_p, cfg.policy);
    res.ref_frames = refs.frames;

    // Masks: dense correspondences dilated at pixel level, reference novelty
    // from flow coverage, both pooled to token resolution for attention.
    res.ref_masks = reference_masks(in.flows, refs.frames);
    res.flow_mask_dilated = dilate(flow_mask(in.flows), cfg.dilation_radius);
    const CorrespondenceMask combined_px = combine_and(res.flow_mask_dilated, res.ref_masks);
    const CorrespondenceMask pooled_flow =
        pool_to_tokens(combined_px, cfg.patch_y, cfg.patch_x, cfg.r, cfg.delta_p);
    const ReferenceMask pooled_ref = pool_to_tokens(res.ref_masks, cfg.patch_y, cfg.patch_x);

    const TokenLayout lay =
        build_layout(den.tokens_high(), den.tokens_wide(), sampled.indices.size(), refs);
    const std::vector<std::uint8_t> col_ok = column_permissions(lay, pooled_ref);
    const AttentionMask m_ref = build_ref_mask(lay, col_ok);
    const AttentionMask m_combined =
        build_combined_mask(lay, pooled_flow, sampled.indices.size(), col_ok);

    // Main-sequence row of each extra reference token's corresponding frame
    // token, used by the dynamics injection.
    std::vector<std::size_t> ref_indices(lay.n_ref);
    for (std::size_t j = 0; j < lay.n_ref; ++j) {
        const std::size_t slot = 1 + j / lay.n_tok;
        ref_indices[j] = lay.n_cond + refs.map_index[slot] * lay.n_tok + j % lay.n_tok;
    }

    // Inversion runs unconditioned on the sampled content maps.
    const Grid4 x0 = take_frames(in.content, sampled.indices);
    auto [x_T, traj] = euler_invert(den, x0, sched.sigmas, cfg.inversion_iterations);
    res.inverted = x_T;

    const Grid4 recon_ref_latents = take_frames(in.content, refs.frames);
    const Grid4 style_ref_latents = take_frames(in.style, refs.frames);

    IhcConfig ihc;
    ihc.lambda_schedule = sched.lambda;
    ihc.window_begin = 0;
    ihc.window_end = sched.ihc_end;
    ihc.filter = LowPassFilter(cfg.height, cfg.width, cfg.rho);
    ihc.validate();

    Grid4 x_r = x_T;
    Grid4 x_s = x_T;
    res.recon_steps.reserve(sched.steps);
    for (std::size_t i = 0; i < sched.steps; ++i) {
        const double sigma = sched.sigmas[i];
        const double dsig = sched.sigmas[i + 1] - sched.sigmas[i];

        CaptureBlockAttention capture(cfg.model_blocks);
        const Grid4 v_r = den.forward(x_r, sigma, &recon_ref_latents, capture);
        StyleBlockAttention style_hooks(capture, m_ref, m_combined, ref_indices,
                                        sched.xi_at(i), sched.beta, sched.gamma_at(i));
        const Grid4 v_s = den.forward(x_s, sigma, &style_ref_latents, style_hooks);

        const Grid4 x_r_raw = euler_step(x_r, v_r, dsig);
        const Grid4 x_s_raw = euler_step(x_s, v_s, dsig);
        check_finite(x_r_raw, "reconstruction branch");
        check_finite(x_s_raw, "stylization branch");

        const Grid4& target = traj.states[i + 1];
        x_s = ihc_compensate(x_s_raw, x_r_raw, target, ihc, i);
        x_r = reconstruction_compensate(x_r_raw, target, sched.lambda_at(i));
        res.recon_steps.push_back(x_r);
    }

    res.stylized = std::move(x_s);
    res.reconstruction = std::move(x_r);
    res.trajectory = std::move(traj);
    return res;
}

AttentionDiagnostics diagnose_attention(const ToyDenoiser& den, const Grid4& latents,
                                        const std::vector<std::size_t>& frame_ids, double sigma,
                                        const DiagQuery& query) {
    latents.validate();
    if (frame_ids.size() != latents.s)
        throw ConfigError("diagnostics need one frame id per latent map");
    const std::size_t th = den.tokens_high();
    const std::size_t tw = den.tokens_wide();
    if (query.y >= th || query.x >= tw)
        throw IndexError("diagnostics query outside the token grid");
    const auto it = std::find(frame_ids.begin(), frame_ids.end(), query.frame);
    if (it == frame_ids.end())
        throw ConfigError("diagnostics frame is not in the latent sequence");
    const auto map = static_cast<std::size_t>(it - frame_ids.begin());

    CaptureBlockAttention capture(1);
    struct FirstBlockOnly : BlockAttention {
        explicit FirstBlockOnly(CaptureBlockAttention& cap) : cap_(cap) {}
        std::pair<Eigen::MatrixXd, Eigen::MatrixXd> self_attention(std::size_t block,
                                                                   const Qkv& main,
                                                                   const Qkv& refs) override {
            if (block == 0) return cap_.self_attention(block, main, refs);
            return plain_.self_attention(block, main, refs);
        }
        std::pair<Eigen::MatrixXd, Eigen::MatrixXd> cross_attention(
            std::size_t block, const Eigen::MatrixXd& q_main, const Eigen::MatrixXd& q_refs,
            const std::vector<Eigen::MatrixXd>& embs) override {
            return plain_.cross_attention(block, q_main, q_refs, embs);
        }
        CaptureBlockAttention& cap_;
        IsolatedBlockAttention plain_;
    } hooks(capture);
    den.forward(latents, sigma, nullptr, hooks);

    const Qkv& qkv = capture.main(0);
    const std::size_t n = qkv.q.rows();
    const Eigen::MatrixXd weights =
        attention_weight_matrix(qkv.q, qkv.k, AttentionMask::all_true(n, n));

    std::vector<TokenPos> pos;
    pos.reserve(n);
    for (std::size_t m = 0; m < latents.s; ++m)
        for (std::size_t ty = 0; ty < th; ++ty)
            for (std::size_t tx = 0; tx < tw; ++tx) pos.push_back({frame_ids[m], ty, tx});
    const std::size_t query_row = map * th * tw + query.y * tw + query.x;
    return attention_diagnostics(weights, pos, pos, th, tw, query_row);
}

}  // namespace vstyle
