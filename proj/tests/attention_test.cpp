#include "vstyle/attention.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <vector>

#include "oracles.hpp"

namespace vstyle {
namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
    return m;
}

TokenMatrix random_tokens(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    TokenMatrix t;
    t.tokens = random_matrix(rows, cols, seed);
    return t;
}

Qkv random_qkv(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    return {random_tokens(rows, cols, seed), random_tokens(rows, cols, seed + 1),
            random_tokens(rows, cols, seed + 2)};
}

AttentionMask random_mask(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.6);
    AttentionMask m(rows, cols, false);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m.set(r, c, coin(rng));
    return m;
}

TEST(TokenMatrixTest, ValidateChecksPositions) {
    TokenMatrix t = random_tokens(3, 4, 1);
    EXPECT_NO_THROW(t.validate());
    t.positions = {{0, 0, 0}, {0, 0, 1}};
    EXPECT_THROW(t.validate(), ShapeError);
    t.positions = {{0, 0, 0}, {0, 0, 1}, {0, 0, 1}};
    EXPECT_NO_THROW(t.validate());
    EXPECT_THROW(t.validate(true), ShapeError);
}

TEST(ConcatTokensTest, StacksRowsAndMergesPositions) {
    TokenMatrix a = random_tokens(2, 3, 5);
    TokenMatrix b = random_tokens(3, 3, 6);
    a.positions = {{0, 0, 0}, {0, 0, 1}};
    b.positions = {{1, 0, 0}, {1, 0, 1}, {1, 1, 0}};
    const TokenMatrix c = concat_tokens(a, b);
    EXPECT_EQ(c.rows(), 5u);
    EXPECT_EQ(c.tokens.topRows(2), a.tokens);
    EXPECT_EQ(c.tokens.bottomRows(3), b.tokens);
    ASSERT_EQ(c.positions.size(), 5u);
    EXPECT_EQ(c.positions[4].frame, 1u);
    b.positions.clear();
    EXPECT_TRUE(concat_tokens(a, b).positions.empty());
    TokenMatrix wide = random_tokens(2, 4, 7);
    EXPECT_THROW(concat_tokens(a, wide), ShapeError);
}

TEST(AttentionTest, AllTrueMaskMatchesPlainAttentionBitwise) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const TokenMatrix q = random_tokens(6, 8, seed * 3);
        const TokenMatrix k = random_tokens(9, 8, seed * 3 + 1);
        const TokenMatrix v = random_tokens(9, 5, seed * 3 + 2);
        const TokenMatrix plain = attention(q, k, v);
        const TokenMatrix masked = masked_attention(q, k, v, AttentionMask::all_true(6, 9));
        EXPECT_EQ(plain.tokens, masked.tokens) << "seed " << seed;
    }
}

TEST(AttentionTest, MaskedRowsMatchRestrictedSoftmaxOracle) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const TokenMatrix q = random_tokens(5, 7, seed * 11);
        const TokenMatrix k = random_tokens(8, 7, seed * 11 + 1);
        const TokenMatrix v = random_tokens(8, 4, seed * 11 + 2);
        const AttentionMask mask = random_mask(5, 8, seed * 11 + 3);
        const TokenMatrix got = masked_attention(q, k, v, mask);
        for (std::size_t row = 0; row < 5; ++row) {
            std::vector<std::size_t> permitted;
            for (std::size_t j = 0; j < 8; ++j)
                if (mask.at(row, j)) permitted.push_back(j);
            if (permitted.empty())
                for (std::size_t j = 0; j < 8; ++j) permitted.push_back(j);
            const Eigen::RowVectorXd want =
                oracle::restricted_softmax_row(q.tokens, row, k.tokens, v.tokens, permitted);
            const double err =
                (got.tokens.row(static_cast<Eigen::Index>(row)) - want).cwiseAbs().maxCoeff();
            EXPECT_LT(err, 1e-6) << "seed " << seed << " row " << row;
        }
    }
}

TEST(AttentionTest, FullyBlockedRowFallsBackToPlainRow) {
    const TokenMatrix q = random_tokens(4, 6, 21);
    const TokenMatrix k = random_tokens(7, 6, 22);
    const TokenMatrix v = random_tokens(7, 3, 23);
    AttentionMask mask = AttentionMask::all_true(4, 7);
    for (std::size_t j = 0; j < 7; ++j) mask.set(2, j, false);
    const TokenMatrix masked = masked_attention(q, k, v, mask);
    const TokenMatrix plain = attention(q, k, v);
    EXPECT_EQ(masked.tokens.row(2), plain.tokens.row(2));
}

TEST(AttentionTest, BlockedKeysShiftMass) {
    const TokenMatrix q = random_tokens(1, 4, 31);
    const TokenMatrix k = random_tokens(3, 4, 32);
    const TokenMatrix v = random_tokens(3, 2, 33);
    AttentionMask mask = AttentionMask::all_true(1, 3);
    mask.set(0, 1, false);
    const TokenMatrix out = masked_attention(q, k, v, mask);
    // With key 1 removed the result is attention over keys {0, 2} only.
    TokenMatrix k2, v2;
    k2.tokens.resize(2, 4);
    k2.tokens.row(0) = k.tokens.row(0);
    k2.tokens.row(1) = k.tokens.row(2);
    v2.tokens.resize(2, 2);
    v2.tokens.row(0) = v.tokens.row(0);
    v2.tokens.row(1) = v.tokens.row(2);
    const TokenMatrix want = attention(q, k2, v2);
    EXPECT_LT((out.tokens - want.tokens).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AttentionTest, ShapeErrors) {
    const TokenMatrix q = random_tokens(3, 4, 41);
    const TokenMatrix k = random_tokens(5, 4, 42);
    const TokenMatrix v = random_tokens(5, 2, 43);
    EXPECT_THROW(attention(random_tokens(3, 5, 44), k, v), ShapeError);
    EXPECT_THROW(attention(q, k, random_tokens(4, 2, 45)), ShapeError);
    EXPECT_THROW(attention(q, random_tokens(0, 4, 46), random_tokens(0, 2, 47)), ShapeError);
    EXPECT_THROW(masked_attention(q, k, v, AttentionMask::all_true(3, 4)), ShapeError);
    EXPECT_THROW(masked_attention(q, k, v, AttentionMask::all_true(2, 5)), ShapeError);
}

TEST(WeightMatrixTest, RowsSumToOneAndBlockedEntriesAreZero) {
    const TokenMatrix q = random_tokens(6, 5, 51);
    const TokenMatrix k = random_tokens(9, 5, 52);
    const AttentionMask mask = random_mask(6, 9, 53);
    const Eigen::MatrixXd w = attention_weight_matrix(q, k, mask);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
        EXPECT_NEAR(w.row(r).sum(), 1.0, 1e-12);
        bool any = false;
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            any = any || mask.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        if (!any) continue;
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
            if (!mask.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)))
                EXPECT_EQ(w(r, c), 0.0);
            else
                EXPECT_GT(w(r, c), 0.0);
        }
    }
}

TEST(IsolatedAttentionTest, MainOutputIgnoresReferenceTokens) {
    BranchTokens no_refs;
    no_refs.recon = random_qkv(6, 5, 61);
    const auto [main_alone, empty_ref] = isolated_attention(no_refs);
    EXPECT_EQ(empty_ref.rows(), 0u);

    BranchTokens with_refs = no_refs;
    with_refs.recon_refs = random_qkv(3, 5, 71);
    const auto [main_with, ref_with] = isolated_attention(with_refs);
    EXPECT_EQ(main_alone.tokens, main_with.tokens);
    EXPECT_EQ(ref_with.rows(), 3u);

    // The reference rows do see the main keys: perturbing a main key moves them.
    BranchTokens perturbed = with_refs;
    perturbed.recon.k.tokens(0, 0) += 1.0;
    const auto [main_p, ref_p] = isolated_attention(perturbed);
    EXPECT_NE(ref_with.tokens, ref_p.tokens);
}

TEST(InjectDynamicsTest, XiOneReturnsIndexedStyleValuesBitwise) {
    BranchTokens bt;
    bt.recon = random_qkv(6, 4, 81);
    bt.recon_refs = random_qkv(2, 4, 82);
    bt.style = random_qkv(6, 4, 83);
    bt.style_refs = random_qkv(2, 4, 84);
    bt.ref_indices = {1, 4};
    const TokenMatrix out = inject_dynamics(bt, 1.0);
    EXPECT_EQ(out.tokens.row(0), bt.style.v.tokens.row(1));
    EXPECT_EQ(out.tokens.row(1), bt.style.v.tokens.row(4));
}

TEST(InjectDynamicsTest, XiZeroUsesReconstructionDynamicsExactly) {
    BranchTokens bt;
    bt.recon = random_qkv(6, 4, 91);
    bt.recon_refs = random_qkv(2, 4, 92);
    bt.style = random_qkv(6, 4, 93);
    bt.style_refs = random_qkv(2, 4, 94);
    bt.ref_indices = {0, 5};
    const TokenMatrix out = inject_dynamics(bt, 0.0);
    for (int j = 0; j < 2; ++j) {
        const auto i = static_cast<Eigen::Index>(bt.ref_indices[static_cast<std::size_t>(j)]);
        const Eigen::RowVectorXd want =
            bt.style_refs.v.tokens.row(j) +
            (bt.recon.v.tokens.row(i) - bt.recon_refs.v.tokens.row(j));
        EXPECT_EQ(out.tokens.row(j), want);
    }
}

TEST(InjectDynamicsTest, InteriorXiBlendsBothBranches) {
    BranchTokens bt;
    bt.recon = random_qkv(5, 3, 101);
    bt.recon_refs = random_qkv(1, 3, 102);
    bt.style = random_qkv(5, 3, 103);
    bt.style_refs = random_qkv(1, 3, 104);
    bt.ref_indices = {2};
    const double xi = 0.25;
    const TokenMatrix out = inject_dynamics(bt, xi);
    const Eigen::RowVectorXd want =
        bt.style_refs.v.tokens.row(0) +
        xi * (bt.style.v.tokens.row(2) - bt.style_refs.v.tokens.row(0)) +
        (1.0 - xi) * (bt.recon.v.tokens.row(2) - bt.recon_refs.v.tokens.row(0));
    EXPECT_LT((out.tokens.row(0) - want).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(InjectDynamicsTest, Errors) {
    BranchTokens bt;
    bt.recon = random_qkv(4, 3, 111);
    bt.recon_refs = random_qkv(2, 3, 112);
    bt.style = random_qkv(4, 3, 113);
    bt.style_refs = random_qkv(2, 3, 114);
    bt.ref_indices = {0};
    EXPECT_THROW(inject_dynamics(bt, 0.5), ShapeError);
    bt.ref_indices = {0, 9};
    EXPECT_THROW(inject_dynamics(bt, 0.5), IndexError);
    bt.ref_indices = {0, 1};
    EXPECT_THROW(inject_dynamics(bt, -0.1), ConfigError);
    EXPECT_THROW(inject_dynamics(bt, 1.5), ConfigError);
    EXPECT_NO_THROW(inject_dynamics(bt, 0.5));
}

BranchTokens example_branches(std::uint64_t seed) {
    BranchTokens bt;
    bt.recon = random_qkv(6, 4, seed);
    bt.recon_refs = random_qkv(2, 4, seed + 10);
    bt.style = random_qkv(6, 4, seed + 20);
    bt.style_refs = random_qkv(2, 4, seed + 30);
    bt.ref_indices = {1, 4};
    return bt;
}

TEST(StyleOutputsTest, Out1SplitsMainAndReferenceRows) {
    const BranchTokens bt = example_branches(200);
    const AttentionMask m_ref = random_mask(6, 8, 205);
    const TokenMatrix style_ref_v = inject_dynamics(bt, 0.5);
    const TokenMatrix o1 = out1(bt, m_ref, style_ref_v);
    ASSERT_EQ(o1.rows(), 8u);

    const TokenMatrix kk = concat_tokens(bt.style.k, bt.style_refs.k);
    const TokenMatrix vv = concat_tokens(bt.style.v, style_ref_v);
    const TokenMatrix main_want = masked_attention(bt.style.q, kk, vv, m_ref);
    const TokenMatrix ref_want = attention(bt.style_refs.q, kk, vv);
    EXPECT_EQ(o1.tokens.topRows(6), main_want.tokens);
    EXPECT_EQ(o1.tokens.bottomRows(2), ref_want.tokens);
}

TEST(StyleOutputsTest, Out2EqualsOut1WhenBranchesCoincide) {
    BranchTokens bt = example_branches(210);
    bt.recon.q = bt.style.q;
    bt.recon.k = bt.style.k;
    bt.recon_refs.q = bt.style_refs.q;
    bt.recon_refs.k = bt.style_refs.k;
    const AttentionMask m_ref = random_mask(6, 8, 215);
    const TokenMatrix style_ref_v = inject_dynamics(bt, 1.0);
    const TokenMatrix a = out1(bt, m_ref, style_ref_v);
    const TokenMatrix b = out2(bt, m_ref, style_ref_v);
    EXPECT_EQ(a.tokens, b.tokens);
}

TEST(StyleOutputsTest, Out2UsesReconstructionQueriesAndKeys) {
    const BranchTokens bt = example_branches(220);
    const AttentionMask m_ref = random_mask(6, 8, 225);
    const TokenMatrix style_ref_v = inject_dynamics(bt, 0.5);
    const TokenMatrix o2 = out2(bt, m_ref, style_ref_v);
    const TokenMatrix kk = concat_tokens(bt.recon.k, bt.recon_refs.k);
    const TokenMatrix vv = concat_tokens(bt.style.v, style_ref_v);
    const TokenMatrix main_want = masked_attention(bt.recon.q, kk, vv, m_ref);
    EXPECT_EQ(o2.tokens.topRows(6), main_want.tokens);
}

TEST(StyleOutputsTest, Out3AppliesCombinedMaskOverFullConcat) {
    const BranchTokens bt = example_branches(230);
    const AttentionMask m_combined = random_mask(8, 8, 235);
    const TokenMatrix style_ref_v = inject_dynamics(bt, 0.5);
    const TokenMatrix o3 = out3(bt, m_combined, style_ref_v);
    const TokenMatrix qq = concat_tokens(bt.style.q, bt.style_refs.q);
    const TokenMatrix kk = concat_tokens(bt.style.k, bt.style_refs.k);
    const TokenMatrix vv = concat_tokens(bt.style.v, style_ref_v);
    const TokenMatrix want = masked_attention(qq, kk, vv, m_combined);
    EXPECT_EQ(o3.tokens, want.tokens);
}

TEST(AggregateTest, CornerWeightsReturnInputsBitwise) {
    const TokenMatrix o1 = random_tokens(5, 3, 301);
    const TokenMatrix o2 = random_tokens(5, 3, 302);
    const TokenMatrix o3 = random_tokens(5, 3, 303);
    EXPECT_EQ(aggregate(o1, o2, o3, 0.0, 0.0).tokens, o1.tokens);
    EXPECT_EQ(aggregate(o1, o2, o3, 1.0, 0.0).tokens, o2.tokens);
    EXPECT_EQ(aggregate(o1, o2, o3, 0.0, 1.0).tokens, o3.tokens);
    const TokenMatrix mix = aggregate(o1, o2, o3, 0.25, 0.5);
    const Eigen::MatrixXd want = 0.25 * o1.tokens + 0.25 * o2.tokens + 0.5 * o3.tokens;
    EXPECT_LT((mix.tokens - want).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AggregateTest, RejectsInvalidWeightsAndShapes) {
    const TokenMatrix o = random_tokens(4, 2, 311);
    EXPECT_THROW(aggregate(o, o, o, -0.1, 0.0), ConfigError);
    EXPECT_THROW(aggregate(o, o, o, 0.0, -0.1), ConfigError);
    EXPECT_THROW(aggregate(o, o, o, 0.7, 0.7), ConfigError);
    EXPECT_THROW(aggregate(o, o, random_tokens(3, 2, 312), 0.2, 0.2), ShapeError);
}

TEST(CrossAttentionTest, MatchesManualConcatenation) {
    const TokenMatrix q = random_tokens(5, 6, 401);
    const std::vector<Eigen::MatrixXd> embeddings = {random_matrix(3, 6, 402),
                                                     random_matrix(4, 6, 403)};
    const TokenMatrix got = cross_attention_concat(q, embeddings);
    TokenMatrix kv;
    kv.tokens.resize(7, 6);
    kv.tokens.topRows(3) = embeddings[0];
    kv.tokens.bottomRows(4) = embeddings[1];
    const TokenMatrix want = attention(q, kv, kv);
    EXPECT_EQ(got.tokens, want.tokens);
}

TEST(CrossAttentionTest, Errors) {
    const TokenMatrix q = random_tokens(5, 6, 411);
    EXPECT_THROW(cross_attention_concat(q, {}), ConfigError);
    EXPECT_THROW(cross_attention_concat(q, {random_matrix(3, 5, 412)}), ShapeError);
}

TEST(DiagnosticsTest, BlockMeansAndSpatialGridMatchHandComputation) {
    // Two query tokens on frame 0, one on frame 2; keys are a 1x2 grid per
    // frame for frames 0 and 2.
    Eigen::MatrixXd w(3, 4);
    w << 0.1, 0.2, 0.3, 0.4,  //
        0.5, 0.1, 0.2, 0.2,   //
        0.0, 0.4, 0.4, 0.2;
    const std::vector<TokenPos> qpos = {{0, 0, 0}, {0, 0, 1}, {2, 0, 0}};
    const std::vector<TokenPos> kpos = {{0, 0, 0}, {0, 0, 1}, {2, 0, 0}, {2, 0, 1}};
    const AttentionDiagnostics d = attention_diagnostics(w, qpos, kpos, 1, 2, 2);

    ASSERT_EQ(d.frame_ids, (std::vector<std::size_t>{0, 2}));
    // Block (0,0): entries {0.1, 0.2, 0.5, 0.1} -> mean 0.225.
    EXPECT_NEAR(d.temporal(0, 0), 0.225, 1e-12);
    EXPECT_NEAR(d.temporal(0, 1), 0.275, 1e-12);
    EXPECT_NEAR(d.temporal(1, 0), 0.2, 1e-12);
    EXPECT_NEAR(d.temporal(1, 1), 0.3, 1e-12);

    ASSERT_EQ(d.spatial.size(), 2u);
    EXPECT_DOUBLE_EQ(d.spatial[0](0, 0), 0.0);
    EXPECT_DOUBLE_EQ(d.spatial[0](0, 1), 0.4);
    EXPECT_DOUBLE_EQ(d.spatial[1](0, 0), 0.4);
    EXPECT_DOUBLE_EQ(d.spatial[1](0, 1), 0.2);
}

TEST(DiagnosticsTest, CsvHeadersArePinned) {
    Eigen::MatrixXd w(1, 1);
    w << 1.0;
    const std::vector<TokenPos> pos = {{0, 0, 0}};
    const AttentionDiagnostics d = attention_diagnostics(w, pos, pos, 1, 1, 0);
    std::ostringstream temporal, spatial;
    write_temporal_csv(temporal, d);
    write_spatial_csv(spatial, d);
    EXPECT_EQ(temporal.str(), "q_frame,k_frame,weight\n0,0,1\n");
    EXPECT_EQ(spatial.str(), "k_frame,y,x,weight\n0,0,0,1\n");
}

TEST(DiagnosticsTest, Errors) {
    Eigen::MatrixXd w(2, 2);
    w.setConstant(0.5);
    const std::vector<TokenPos> pos = {{0, 0, 0}, {0, 0, 1}};
    EXPECT_THROW(attention_diagnostics(w, {{0, 0, 0}}, pos, 1, 2, 0), ShapeError);
    EXPECT_THROW(attention_diagnostics(w, pos, pos, 1, 2, 5), IndexError);
    EXPECT_THROW(attention_diagnostics(w, pos, pos, 1, 1, 0), IndexError);
}

}  // namespace
}  // namespace vstyle
