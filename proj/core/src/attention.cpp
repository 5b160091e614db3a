#include "vstyle/attention.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <tuple>

namespace vstyle {

void TokenMatrix::validate(bool require_unique_positions) const {
    if (!positions.empty() && positions.size() != rows())
        throw ShapeError("token positions must be empty or one per row");
    if (require_unique_positions && !positions.empty()) {
        std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
        for (const TokenPos& p : positions)
            if (!seen.insert({p.frame, p.y, p.x}).second)
                throw ShapeError("duplicate token position");
    }
}

TokenMatrix concat_tokens(const TokenMatrix& a, const TokenMatrix& b) {
    if (a.rows() == 0) return b;
    if (b.rows() == 0) return a;
    if (a.dim() != b.dim()) throw ShapeError("concat_tokens: feature dims differ");
    TokenMatrix out;
    out.tokens.resize(a.tokens.rows() + b.tokens.rows(), a.tokens.cols());
    out.tokens.topRows(a.tokens.rows()) = a.tokens;
    out.tokens.bottomRows(b.tokens.rows()) = b.tokens;
    if (!a.positions.empty() && !b.positions.empty()) {
        out.positions = a.positions;
        out.positions.insert(out.positions.end(), b.positions.begin(), b.positions.end());
    }
    return out;
}

namespace {

// Shared softmax-attention core. Every attention variant funnels through
// this row routine so that a masked call with a full key set is bit-equal to
// the plain call.
void attend_row(const Eigen::MatrixXd& q, std::size_t row, const Eigen::MatrixXd& k,
                const Eigen::MatrixXd& v, const std::vector<std::size_t>& keys,
                double inv_sqrt_d, Eigen::MatrixXd* out, Eigen::MatrixXd* weights) {
    const std::size_t nk = keys.size();
    std::vector<double> logits(nk);
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nk; ++j) {
        logits[j] = q.row(static_cast<Eigen::Index>(row))
                        .dot(k.row(static_cast<Eigen::Index>(keys[j]))) *
                    inv_sqrt_d;
        max_logit = std::max(max_logit, logits[j]);
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < nk; ++j) {
        logits[j] = std::exp(logits[j] - max_logit);
        denom += logits[j];
    }
    if (out != nullptr) {
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(v.cols());
        for (std::size_t j = 0; j < nk; ++j)
            acc += logits[j] * v.row(static_cast<Eigen::Index>(keys[j]));
        out->row(static_cast<Eigen::Index>(row)) = acc / denom;
    }
    if (weights != nullptr)
        for (std::size_t j = 0; j < nk; ++j)
            (*weights)(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(keys[j])) =
                logits[j] / denom;
}

void check_qkv(const TokenMatrix& q, const TokenMatrix& k, const TokenMatrix& v) {
    q.validate();
    k.validate();
    v.validate();
    if (q.dim() != k.dim()) throw ShapeError("attention: query/key dims differ");
    if (k.rows() != v.rows()) throw ShapeError("attention: key/value counts differ");
    if (k.rows() == 0) throw ShapeError("attention: needs at least one key");
}

std::vector<std::size_t> full_key_set(std::size_t n) {
    std::vector<std::size_t> keys(n);
    for (std::size_t j = 0; j < n; ++j) keys[j] = j;
    return keys;
}

void attend_all(const TokenMatrix& q, const TokenMatrix& k, const TokenMatrix& v,
                const AttentionMask* mask, Eigen::MatrixXd* out, Eigen::MatrixXd* weights) {
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.dim()));
    const std::vector<std::size_t> all_keys = full_key_set(k.rows());
    std::vector<std::size_t> keys;
    keys.reserve(k.rows());
    for (std::size_t row = 0; row < q.rows(); ++row) {
        const std::vector<std::size_t>* use = &all_keys;
        if (mask != nullptr) {
            keys.clear();
            for (std::size_t j = 0; j < k.rows(); ++j)
                if (mask->at(row, j)) keys.push_back(j);
            // A fully blocked row falls back to unmasked attention.
            if (!keys.empty()) use = &keys;
        }
        attend_row(q.tokens, row, k.tokens, v.tokens, *use, inv_sqrt_d, out, weights);
    }
}

}  // namespace

TokenMatrix attention(const TokenMatrix& q, const TokenMatrix& k, const TokenMatrix& v) {
    check_qkv(q, k, v);
    TokenMatrix out;
    out.tokens.resize(q.tokens.rows(), v.tokens.cols());
    out.positions = q.positions;
    attend_all(q, k, v, nullptr, &out.tokens, nullptr);
    return out;
}

TokenMatrix masked_attention(const TokenMatrix& q, const TokenMatrix& k, const TokenMatrix& v,
                             const AttentionMask& mask) {
    check_qkv(q, k, v);
    if (mask.rows != q.rows() || mask.cols != k.rows())
        throw ShapeError("masked_attention: mask dims mismatch");
    TokenMatrix out;
    out.tokens.resize(q.tokens.rows(), v.tokens.cols());
    out.positions = q.positions;
    attend_all(q, k, v, &mask, &out.tokens, nullptr);
    return out;
}

Eigen::MatrixXd attention_weight_matrix(const TokenMatrix& q, const TokenMatrix& k,
                                        const AttentionMask& mask) {
    q.validate();
    k.validate();
    if (q.dim() != k.dim()) throw ShapeError("attention: query/key dims differ");
    if (k.rows() == 0) throw ShapeError("attention: needs at least one key");
    if (mask.rows != q.rows() || mask.cols != k.rows())
        throw ShapeError("attention_weight_matrix: mask dims mismatch");
    Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(q.tokens.rows(), k.tokens.rows());
    TokenMatrix dummy_v;
    dummy_v.tokens = Eigen::MatrixXd::Zero(k.tokens.rows(), 1);
    attend_all(q, k, dummy_v, &mask, nullptr, &weights);
    return weights;
}

std::pair<TokenMatrix, TokenMatrix> isolated_attention(const BranchTokens& bt) {
    TokenMatrix main_out = attention(bt.recon.q, bt.recon.k, bt.recon.v);
    TokenMatrix ref_out;
    if (bt.recon_refs.q.rows() > 0) {
        const TokenMatrix kk = concat_tokens(bt.recon.k, bt.recon_refs.k);
        const TokenMatrix vv = concat_tokens(bt.recon.v, bt.recon_refs.v);
        ref_out = attention(bt.recon_refs.q, kk, vv);
    }
    return {std::move(main_out), std::move(ref_out)};
}

TokenMatrix inject_dynamics(const BranchTokens& bt, double xi) {
    if (!(xi >= 0.0) || xi > 1.0) throw ConfigError("xi must lie in [0, 1]");
    const std::size_t n_ref = bt.style_refs.v.rows();
    if (bt.ref_indices.size() != n_ref)
        throw ShapeError("inject_dynamics: one index per reference token required");
    if (bt.recon_refs.v.rows() != n_ref)
        throw ShapeError("inject_dynamics: branch reference counts differ");
    for (std::size_t i : bt.ref_indices)
        if (i >= bt.style.v.rows() || i >= bt.recon.v.rows())
            throw IndexError("inject_dynamics: reference index out of range");

    TokenMatrix out = bt.style_refs.v;
    for (std::size_t j = 0; j < n_ref; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const auto ii = static_cast<Eigen::Index>(bt.ref_indices[j]);
        if (xi == 1.0) {
            out.tokens.row(jj) = bt.style.v.tokens.row(ii);
        } else if (xi == 0.0) {
            out.tokens.row(jj) = bt.style_refs.v.tokens.row(jj) +
                                 (bt.recon.v.tokens.row(ii) - bt.recon_refs.v.tokens.row(jj));
        } else {
            out.tokens.row(jj) =
                bt.style_refs.v.tokens.row(jj) +
                xi * (bt.style.v.tokens.row(ii) - bt.style_refs.v.tokens.row(jj)) +
                (1.0 - xi) * (bt.recon.v.tokens.row(ii) - bt.recon_refs.v.tokens.row(jj));
        }
    }
    return out;
}

TokenMatrix out1(const BranchTokens& bt, const AttentionMask& m_ref,
                 const TokenMatrix& style_ref_v) {
    const TokenMatrix kk = concat_tokens(bt.style.k, bt.style_refs.k);
    const TokenMatrix vv = concat_tokens(bt.style.v, style_ref_v);
    TokenMatrix main_out = masked_attention(bt.style.q, kk, vv, m_ref);
    if (bt.style_refs.q.rows() == 0) return main_out;
    TokenMatrix ref_out = attention(bt.style_refs.q, kk, vv);
    return concat_tokens(main_out, ref_out);
}

TokenMatrix out2(const BranchTokens& bt, const AttentionMask& m_ref,
                 const TokenMatrix& style_ref_v) {
    if (bt.recon.q.rows() != bt.style.q.rows() ||
        bt.recon_refs.q.rows() != bt.style_refs.q.rows())
        throw ShapeError("out2: branch token counts differ");
    const TokenMatrix kk = concat_tokens(bt.recon.k, bt.recon_refs.k);
    const TokenMatrix vv = concat_tokens(bt.style.v, style_ref_v);
    TokenMatrix main_out = masked_attention(bt.recon.q, kk, vv, m_ref);
    if (bt.recon_refs.q.rows() == 0) return main_out;
    TokenMatrix ref_out = attention(bt.recon_refs.q, kk, vv);
    return concat_tokens(main_out, ref_out);
}

TokenMatrix out3(const BranchTokens& bt, const AttentionMask& m_combined,
                 const TokenMatrix& style_ref_v) {
    const TokenMatrix qq = concat_tokens(bt.style.q, bt.style_refs.q);
    const TokenMatrix kk = concat_tokens(bt.style.k, bt.style_refs.k);
    const TokenMatrix vv = concat_tokens(bt.style.v, style_ref_v);
    return masked_attention(qq, kk, vv, m_combined);
}

TokenMatrix aggregate(const TokenMatrix& o1, const TokenMatrix& o2, const TokenMatrix& o3,
                      double beta, double gamma) {
    if (!(beta >= 0.0) || !(gamma >= 0.0) || beta + gamma > 1.0)
        throw ConfigError("aggregate weights must be >= 0 with beta + gamma <= 1");
    if (o1.tokens.rows() != o2.tokens.rows() || o1.tokens.cols() != o2.tokens.cols() ||
        o1.tokens.rows() != o3.tokens.rows() || o1.tokens.cols() != o3.tokens.cols())
        throw ShapeError("aggregate: output shapes differ");
    if (beta == 0.0 && gamma == 0.0) return o1;
    if (beta == 1.0 && gamma == 0.0) return o2;
    if (beta == 0.0 && gamma == 1.0) return o3;
    TokenMatrix out = o1;
    out.tokens = (1.0 - beta - gamma) * o1.tokens + beta * o2.tokens + gamma * o3.tokens;
    return out;
}

TokenMatrix cross_attention_concat(const TokenMatrix& query,
                                   const std::vector<Eigen::MatrixXd>& ref_embeddings) {
    if (ref_embeddings.empty())
        throw ConfigError("cross_attention_concat needs at least one embedding");
    Eigen::Index total = 0;
    for (const auto& e : ref_embeddings) {
        if (static_cast<std::size_t>(e.cols()) != query.dim())
            throw ShapeError("cross_attention_concat: embedding dim mismatch");
        total += e.rows();
    }
    TokenMatrix kv;
    kv.tokens.resize(total, query.tokens.cols());
    Eigen::Index at = 0;
    for (const auto& e : ref_embeddings) {
        kv.tokens.middleRows(at, e.rows()) = e;
        at += e.rows();
    }
    return attention(query, kv, kv);
}

AttentionDiagnostics attention_diagnostics(const Eigen::MatrixXd& weights,
                                           const std::vector<TokenPos>& query_pos,
                                           const std::vector<TokenPos>& key_pos,
                                           std::size_t grid_h, std::size_t grid_w,
                                           std::size_t query_row) {
    if (query_pos.size() != static_cast<std::size_t>(weights.rows()) ||
        key_pos.size() != static_cast<std::size_t>(weights.cols()))
        throw ShapeError("attention_diagnostics: partition does not match weights");
    if (query_row >= query_pos.size())
        throw IndexError("attention_diagnostics: query row out of range");

    std::set<std::size_t> frames;
    for (const TokenPos& p : query_pos) frames.insert(p.frame);
    for (const TokenPos& p : key_pos) frames.insert(p.frame);

    AttentionDiagnostics d;
    d.frame_ids.assign(frames.begin(), frames.end());
    const std::size_t nf = d.frame_ids.size();
    auto block_of = [&](std::size_t frame) {
        return static_cast<std::size_t>(
            std::lower_bound(d.frame_ids.begin(), d.frame_ids.end(), frame) -
            d.frame_ids.begin());
    };

    d.temporal = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nf),
                                       static_cast<Eigen::Index>(nf));
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nf),
                                                   static_cast<Eigen::Index>(nf));
    for (std::size_t r = 0; r < query_pos.size(); ++r)
        for (std::size_t c = 0; c < key_pos.size(); ++c) {
            const auto a = static_cast<Eigen::Index>(block_of(query_pos[r].frame));
            const auto b = static_cast<Eigen::Index>(block_of(key_pos[c].frame));
            d.temporal(a, b) += weights(static_cast<Eigen::Index>(r),
                                        static_cast<Eigen::Index>(c));
            counts(a, b) += 1.0;
        }
    for (Eigen::Index a = 0; a < d.temporal.rows(); ++a)
        for (Eigen::Index b = 0; b < d.temporal.cols(); ++b)
            if (counts(a, b) > 0.0) d.temporal(a, b) /= counts(a, b);

    d.spatial.assign(nf, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid_h),
                                               static_cast<Eigen::Index>(grid_w)));
    for (std::size_t c = 0; c < key_pos.size(); ++c) {
        const TokenPos& p = key_pos[c];
        if (p.y >= grid_h || p.x >= grid_w)
            throw IndexError("attention_diagnostics: key position outside grid");
        d.spatial[block_of(p.frame)](static_cast<Eigen::Index>(p.y),
                                     static_cast<Eigen::Index>(p.x)) =
            weights(static_cast<Eigen::Index>(query_row), static_cast<Eigen::Index>(c));
    }
    return d;
}

void write_temporal_csv(std::ostream& os, const AttentionDiagnostics& d) {
    os << "q_frame,k_frame,weight\n";
    os << std::setprecision(17);
    for (Eigen::Index a = 0; a < d.temporal.rows(); ++a)
        for (Eigen::Index b = 0; b < d.temporal.cols(); ++b)
            os << d.frame_ids[static_cast<std::size_t>(a)] << ','
               << d.frame_ids[static_cast<std::size_t>(b)] << ',' << d.temporal(a, b) << '\n';
}

void write_spatial_csv(std::ostream& os, const AttentionDiagnostics& d) {
    os << "k_frame,y,x,weight\n";
    os << std::setprecision(17);
    for (std::size_t f = 0; f < d.spatial.size(); ++f)
        for (Eigen::Index y = 0; y < d.spatial[f].rows(); ++y)
            for (Eigen::Index x = 0; x < d.spatial[f].cols(); ++x)
                os << d.frame_ids[f] << ',' << y << ',' << x << ',' << d.spatial[f](y, x)
                   << '\n';
}

}  // namespace vstyle
