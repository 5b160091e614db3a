#include "vstyle/denoiser.hpp"

#include <cmath>

#include "vstyle/codec.hpp"
#include "vstyle/rng.hpp"

namespace vstyle {

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> IsolatedBlockAttention::self_attention(
    std::size_t, const Qkv& main, const Qkv& refs) {
    BranchTokens bt;
    bt.recon = main;
    bt.recon_refs = refs;
    auto [main_out, ref_out] = isolated_attention(bt);
    return {std::move(main_out.tokens), std::move(ref_out.tokens)};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> IsolatedBlockAttention::cross_attention(
    std::size_t, const Eigen::MatrixXd& q_main, const Eigen::MatrixXd& q_refs,
    const std::vector<Eigen::MatrixXd>& ref_embeddings) {
    TokenMatrix qm;
    qm.tokens = q_main;
    Eigen::MatrixXd main_out = cross_attention_concat(qm, ref_embeddings).tokens;
    Eigen::MatrixXd ref_out(0, q_main.cols());
    if (q_refs.rows() > 0) {
        TokenMatrix qr;
        qr.tokens = q_refs;
        ref_out = cross_attention_concat(qr, ref_embeddings).tokens;
    }
    return {std::move(main_out), std::move(ref_out)};
}

namespace {

Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& g,
                           const Eigen::VectorXd& b) {
    Eigen::MatrixXd out(x.rows(), x.cols());
    const double n = static_cast<double>(x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mean = x.row(r).sum() / n;
        const double var = (x.row(r).array() - mean).square().sum() / n;
        const double inv = 1.0 / std::sqrt(var + 1e-6);
        out.row(r) =
            ((x.row(r).array() - mean) * inv * g.transpose().array()) + b.transpose().array();
    }
    return out;
}

Eigen::MatrixXd gelu(const Eigen::MatrixXd& x) {
    return x.unaryExpr(
        [](double v) { return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))); });
}

}  // namespace

ToyDenoiser::ToyDenoiser(const DenoiserParams& p) : params_(p) {
    if (p.channels == 0 || p.blocks == 0 || p.d_model == 0)
        throw ConfigError("denoiser dims must be >= 1");
    if (p.patch_y == 0 || p.patch_x == 0 || p.height % p.patch_y != 0 ||
        p.width % p.patch_x != 0)
        throw ConfigError("patch sizes must divide the latent dims");
    if (!(p.head_gain > 0.0)) throw ConfigError("head gain must be positive");

    const auto d = static_cast<Eigen::Index>(p.d_model);
    const auto patch_dim = static_cast<Eigen::Index>(p.channels * p.patch_y * p.patch_x);
    SeededGaussian rng(p.seed);

    w_patch_.resize(patch_dim, d);
    rng.fill(w_patch_, 1.0 / std::sqrt(static_cast<double>(patch_dim)));
    b_patch_ = Eigen::VectorXd::Zero(d);
    pos_row_.resize(static_cast<Eigen::Index>(tokens_high()), d);
    rng.fill(pos_row_, 0.5);
    pos_col_.resize(static_cast<Eigen::Index>(tokens_wide()), d);
    rng.fill(pos_col_, 0.5);
    w_sigma_.resize(d);
    rng.fill(w_sigma_, 0.5);
    w_emb_.resize(patch_dim, d);
    rng.fill(w_emb_, 1.0 / std::sqrt(static_cast<double>(patch_dim)));

    const double ws = 1.0 / std::sqrt(static_cast<double>(p.d_model));
    blocks_.resize(p.blocks);
    for (auto& blk : blocks_) {
        blk.ln1_g = Eigen::VectorXd::Ones(d);
        blk.ln1_b = Eigen::VectorXd::Zero(d);
        blk.w_q.resize(d, d);
        rng.fill(blk.w_q, ws);
        blk.w_k.resize(d, d);
        rng.fill(blk.w_k, ws);
        blk.w_v.resize(d, d);
        rng.fill(blk.w_v, ws);
        blk.w_o.resize(d, d);
        rng.fill(blk.w_o, ws);
        blk.lnc_g = Eigen::VectorXd::Ones(d);
        blk.lnc_b = Eigen::VectorXd::Zero(d);
        blk.w_cq.resize(d, d);
        rng.fill(blk.w_cq, ws);
        blk.w_ce.resize(d, d);
        rng.fill(blk.w_ce, ws);
        blk.w_co.resize(d, d);
        rng.fill(blk.w_co, ws);
        blk.ln2_g = Eigen::VectorXd::Ones(d);
        blk.ln2_b = Eigen::VectorXd::Zero(d);
        blk.w_m1.resize(d, 4 * d);
        rng.fill(blk.w_m1, ws);
        blk.b_m1 = Eigen::VectorXd::Zero(4 * d);
        blk.w_m2.resize(4 * d, d);
        rng.fill(blk.w_m2, 0.5 * ws);
        blk.b_m2 = Eigen::VectorXd::Zero(d);
    }
    lnf_g_ = Eigen::VectorXd::Ones(d);
    lnf_b_ = Eigen::VectorXd::Zero(d);
    w_head_.resize(d, patch_dim);
    rng.fill(w_head_, p.head_gain / std::sqrt(static_cast<double>(p.d_model)));
    b_head_ = Eigen::VectorXd::Zero(patch_dim);
}

Eigen::MatrixXd ToyDenoiser::embed_maps(const Grid4& g, double sigma) const {
    const std::size_t th = tokens_high();
    const std::size_t tw = tokens_wide();
    const std::size_t patch_dim = params_.channels * params_.patch_y * params_.patch_x;
    Eigen::MatrixXd flat(static_cast<Eigen::Index>(g.s * th * tw),
                         static_cast<Eigen::Index>(patch_dim));
    Eigen::Index row = 0;
    for (std::size_t m = 0; m < g.s; ++m)
        for (std::size_t ty = 0; ty < th; ++ty)
            for (std::size_t tx = 0; tx < tw; ++tx, ++row) {
                Eigen::Index col = 0;
                for (std::size_t ch = 0; ch < params_.channels; ++ch)
                    for (std::size_t dy = 0; dy < params_.patch_y; ++dy)
                        for (std::size_t dx = 0; dx < params_.patch_x; ++dx, ++col)
                            flat(row, col) = static_cast<double>(
                                g.at(m, ch, ty * params_.patch_y + dy, tx * params_.patch_x + dx));
            }
    Eigen::MatrixXd tokens = flat * w_patch_;
    tokens.rowwise() += b_patch_.transpose();
    row = 0;
    for (std::size_t m = 0; m < g.s; ++m)
        for (std::size_t ty = 0; ty < th; ++ty)
            for (std::size_t tx = 0; tx < tw; ++tx, ++row)
                tokens.row(row) += pos_row_.row(static_cast<Eigen::Index>(ty)) +
                                   pos_col_.row(static_cast<Eigen::Index>(tx));
    tokens.rowwise() += sigma * w_sigma_.transpose();
    return tokens;
}

Eigen::MatrixXd ToyDenoiser::embed_reference(const Grid4& refs, std::size_t index) const {
    const std::size_t th = tokens_high();
    const std::size_t tw = tokens_wide();
    const std::size_t patch_dim = params_.channels * params_.patch_y * params_.patch_x;
    Eigen::MatrixXd flat(static_cast<Eigen::Index>(th * tw),
                         static_cast<Eigen::Index>(patch_dim));
    Eigen::Index row = 0;
    for (std::size_t ty = 0; ty < th; ++ty)
        for (std::size_t tx = 0; tx < tw; ++tx, ++row) {
            Eigen::Index col = 0;
            for (std::size_t ch = 0; ch < params_.channels; ++ch)
                for (std::size_t dy = 0; dy < params_.patch_y; ++dy)
                    for (std::size_t dx = 0; dx < params_.patch_x; ++dx, ++col)
                        flat(row, col) = static_cast<double>(refs.at(
                            index, ch, ty * params_.patch_y + dy, tx * params_.patch_x + dx));
        }
    return flat * w_emb_;
}

Grid4 ToyDenoiser::velocity(const Grid4& x, double sigma) const {
    IsolatedBlockAttention plain;
    return forward(x, sigma, nullptr, plain);
}

Grid4 ToyDenoiser::forward(const Grid4& x, double sigma, const Grid4* refs,
                           BlockAttention& hooks) const {
    x.validate();
    if (x.c != params_.channels || x.h != params_.height || x.w != params_.width)
        throw ShapeError("denoiser: latent dims do not match the model");
    if (refs != nullptr) {
        refs->validate();
        if (refs->c != params_.channels || refs->h != params_.height ||
            refs->w != params_.width)
            throw ShapeError("denoiser: reference dims do not match the model");
    }

    const std::size_t tpm = tokens_per_map();
    const std::size_t n_cond = refs != nullptr ? tpm : 0;
    const std::size_t n_extra_refs = refs != nullptr && refs->s > 1 ? refs->s - 1 : 0;

    Eigen::MatrixXd main_stream;
    if (refs != nullptr) {
        const Grid4 first = take_frames(*refs, {0});
        Eigen::MatrixXd cond = embed_maps(first, sigma);
        Eigen::MatrixXd maps = embed_maps(x, sigma);
        main_stream.resize(cond.rows() + maps.rows(), cond.cols());
        main_stream.topRows(cond.rows()) = cond;
        main_stream.bottomRows(maps.rows()) = maps;
    } else {
        main_stream = embed_maps(x, sigma);
    }

    Eigen::MatrixXd ref_stream(0, main_stream.cols());
    if (n_extra_refs > 0) {
        std::vector<std::size_t> rest(n_extra_refs);
        for (std::size_t j = 0; j < n_extra_refs; ++j) rest[j] = j + 1;
        ref_stream = embed_maps(take_frames(*refs, rest), sigma);
    }

    std::vector<Eigen::MatrixXd> raw_embs;
    if (refs != nullptr)
        for (std::size_t j = 0; j < refs->s; ++j) raw_embs.push_back(embed_reference(*refs, j));

    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const Block& blk = blocks_[b];

        Qkv main_qkv;
        const Eigen::MatrixXd ln_main = layer_norm(main_stream, blk.ln1_g, blk.ln1_b);
        main_qkv.q.tokens = ln_main * blk.w_q;
        main_qkv.k.tokens = ln_main * blk.w_k;
        main_qkv.v.tokens = ln_main * blk.w_v;
        Qkv ref_qkv;
        ref_qkv.q.tokens.resize(0, main_stream.cols());
        ref_qkv.k.tokens.resize(0, main_stream.cols());
        ref_qkv.v.tokens.resize(0, main_stream.cols());
        if (ref_stream.rows() > 0) {
            const Eigen::MatrixXd ln_refs = layer_norm(ref_stream, blk.ln1_g, blk.ln1_b);
            ref_qkv.q.tokens = ln_refs * blk.w_q;
            ref_qkv.k.tokens = ln_refs * blk.w_k;
            ref_qkv.v.tokens = ln_refs * blk.w_v;
        }
        auto [attn_main, attn_refs] = hooks.self_attention(b, main_qkv, ref_qkv);
        main_stream += attn_main * blk.w_o;
        if (ref_stream.rows() > 0) ref_stream += attn_refs * blk.w_o;

        if (!raw_embs.empty()) {
            std::vector<Eigen::MatrixXd> embs;
            embs.reserve(raw_embs.size());
            for (const auto& e : raw_embs) embs.push_back(e * blk.w_ce);
            const Eigen::MatrixXd lnc_main = layer_norm(main_stream, blk.lnc_g, blk.lnc_b);
            Eigen::MatrixXd q_main = lnc_main * blk.w_cq;
            Eigen::MatrixXd q_refs(0, main_stream.cols());
            if (ref_stream.rows() > 0)
                q_refs = layer_norm(ref_stream, blk.lnc_g, blk.lnc_b) * blk.w_cq;
            auto [cross_main, cross_refs] = hooks.cross_attention(b, q_main, q_refs, embs);
            main_stream += cross_main * blk.w_co;
            if (ref_stream.rows() > 0) ref_stream += cross_refs * blk.w_co;
        }

        auto mlp = [&blk](const Eigen::MatrixXd& stream) {
            Eigen::MatrixXd hidden = layer_norm(stream, blk.ln2_g, blk.ln2_b) * blk.w_m1;
            hidden.rowwise() += blk.b_m1.transpose();
            Eigen::MatrixXd out = gelu(hidden) * blk.w_m2;
            out.rowwise() += blk.b_m2.transpose();
            return out;
        };
        main_stream += mlp(main_stream);
        if (ref_stream.rows() > 0) ref_stream += mlp(ref_stream);
    }

    const Eigen::MatrixXd map_rows =
        main_stream.bottomRows(main_stream.rows() - static_cast<Eigen::Index>(n_cond));
    const Eigen::MatrixXd out_tokens =
        (layer_norm(map_rows, lnf_g_, lnf_b_) * w_head_).rowwise() + b_head_.transpose();

    Grid4 v(x.s, x.c, x.h, x.w);
    const std::size_t th = tokens_high();
    const std::size_t tw = tokens_wide();
    Eigen::Index row = 0;
    for (std::size_t m = 0; m < x.s; ++m)
        for (std::size_t ty = 0; ty < th; ++ty)
            for (std::size_t tx = 0; tx < tw; ++tx, ++row) {
                Eigen::Index col = 0;
                for (std::size_t ch = 0; ch < params_.channels; ++ch)
                    for (std::size_t dy = 0; dy < params_.patch_y; ++dy)
                        for (std::size_t dx = 0; dx < params_.patch_x; ++dx, ++col)
                            v.at(m, ch, ty * params_.patch_y + dy, tx * params_.patch_x + dx) =
                                static_cast<float>(out_tokens(row, col));
            }
    return v;
}

}  // namespace vstyle
