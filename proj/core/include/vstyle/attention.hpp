#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

#include "vstyle/errors.hpp"

namespace vstyle {

struct TokenPos {
    std::size_t frame = 0;
    std::size_t y = 0;
    std::size_t x = 0;

    friend bool operator==(const TokenPos&, const TokenPos&) = default;
};

// Row-per-token matrix with optional (frame, y, x) metadata. positions is
// either empty or one triple per row.
struct TokenMatrix {
    Eigen::MatrixXd tokens;           // n x d
    std::vector<TokenPos> positions;  // size 0 or n

    std::size_t rows() const { return static_cast<std::size_t>(tokens.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(tokens.cols()); }
    // ShapeError on position-count mismatch; with require_unique_positions,
    // also on duplicate triples.
    void validate(bool require_unique_positions = false) const;
};

// Row-wise concatenation; positions concatenate when both sides carry them,
// otherwise the result carries none.
TokenMatrix concat_tokens(const TokenMatrix& a, const TokenMatrix& b);

// Boolean query x key permission matrix, 1 = attend allowed.
struct AttentionMask {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> allow;

    AttentionMask() = default;
    AttentionMask(std::size_t r, std::size_t c, bool value)
        : rows(r), cols(c), allow(r * c, value ? 1 : 0) {}

    bool at(std::size_t r, std::size_t c) const { return allow[r * cols + c] != 0; }
    void set(std::size_t r, std::size_t c, bool v) { allow[r * cols + c] = v ? 1 : 0; }
    static AttentionMask all_true(std::size_t r, std::size_t c) { return {r, c, true}; }
};

struct Qkv {
    TokenMatrix q;
    TokenMatrix k;
    TokenMatrix v;
};

// Both branches' main-sequence and reference-token projections for one
// attention site, plus the main-sequence row index of each reference token's
// corresponding frame token (i_R).
struct BranchTokens {
    Qkv recon;
    Qkv recon_refs;
    Qkv style;
    Qkv style_refs;
    std::vector<std::size_t> ref_indices;
};

// Single-head softmax(q k^T / sqrt(d)) v.
TokenMatrix attention(const TokenMatrix& q, const TokenMatrix& k, const TokenMatrix& v);

// Softmax restricted to permitted keys per row; blocked keys get exactly
// zero weight. A row with no permitted keys falls back to the unmasked row.
TokenMatrix masked_attention(const TokenMatrix& q, const TokenMatrix& k, const TokenMatrix& v,
                             const AttentionMask& mask);

// The softmax weight matrix of masked_attention (blocked entries 0).
Eigen::MatrixXd attention_weight_matrix(const TokenMatrix& q, const TokenMatrix& k,
                                        const AttentionMask& mask);

// Reconstruction-side attention: main tokens attend only among themselves;
// reference tokens attend over main + reference keys. Returns (main output,
// reference output); the latter is empty when there are no reference tokens.
std::pair<TokenMatrix, TokenMatrix> isolated_attention(const BranchTokens& bt);

// Blends dynamics into the stylization reference values:
// V^s_R + xi * (V^s[i_R] - V^s_R) + (1 - xi) * (V^r[i_R] - V^r_R).
// xi = 1 returns the indexed stylization value rows bit-equal.
TokenMatrix inject_dynamics(const BranchTokens& bt, double xi);

// Stylization output 1: main rows via masked attention over style + ref
// keys/values, reference rows via plain attention over the same
// concatenation; results concatenated main-then-refs. m_ref has shape
// (n_main, n_main + n_ref). style_ref_v overrides bt.style_refs.v (the
// dynamics-injected values).
TokenMatrix out1(const BranchTokens& bt, const AttentionMask& m_ref,
                 const TokenMatrix& style_ref_v);

// Stylization output 2: same structure as out1 with queries and keys taken
// from the reconstruction branch; values remain stylization values.
TokenMatrix out2(const BranchTokens& bt, const AttentionMask& m_ref,
                 const TokenMatrix& style_ref_v);

// Stylization output 3: one masked attention over the full style + ref
// concatenation with the combined flow/reference mask of shape
// (n_main + n_ref, n_main + n_ref).
TokenMatrix out3(const BranchTokens& bt, const AttentionMask& m_combined,
                 const TokenMatrix& style_ref_v);

// (1 - beta - gamma) o1 + beta o2 + gamma o3; the corner weights return the
// corresponding input bit-equal.
TokenMatrix aggregate(const TokenMatrix& o1, const TokenMatrix& o2, const TokenMatrix& o3,
                      double beta, double gamma);

// Plain attention of query tokens over row-concatenated reference embedding
// matrices used as both keys and values. Empty list is a ConfigError.
TokenMatrix cross_attention_concat(const TokenMatrix& query,
                                   const std::vector<Eigen::MatrixXd>& ref_embeddings);

// Frame-block averages of an attention weight matrix plus the per-frame
// spatial weight grids of one query row.
struct AttentionDiagnostics {
    std::vector<std::size_t> frame_ids;          // block index -> frame id
    Eigen::MatrixXd temporal;                    // F x F mean weights
    std::vector<Eigen::MatrixXd> spatial;        // per frame block, grid_h x grid_w
};

AttentionDiagnostics attention_diagnostics(const Eigen::MatrixXd& weights,
                                           const std::vector<TokenPos>& query_pos,
                                           const std::vector<TokenPos>& key_pos,
                                           std::size_t grid_h, std::size_t grid_w,
                                           std::size_t query_row);

// CSV rows "q_frame,k_frame,weight" / "k_frame,y,x,weight".
void write_temporal_csv(std::ostream& os, const AttentionDiagnostics& d);
void write_spatial_csv(std::ostream& os, const AttentionDiagnostics& d);

}  // namespace vstyle
