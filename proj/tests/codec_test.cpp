#include "vstyle/codec.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "test_util.hpp"

namespace vstyle {
namespace {

using test::random_grid;

TEST(SampleIndicesTest, HandExamples) {
    EXPECT_EQ(sample_indices(9, 4, 3).indices, (std::vector<std::size_t>{0, 3, 7}));
    EXPECT_EQ(sample_indices(9, 4, 4).indices, (std::vector<std::size_t>{0, 4, 8}));
    EXPECT_EQ(sample_indices(8, 4, 1).indices, (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(sample_indices(2, 1, 1).indices, (std::vector<std::size_t>{0, 1}));
    // No full block: only frame 0 survives.
    EXPECT_EQ(sample_indices(3, 5, 0).indices, (std::vector<std::size_t>{0}));
}

TEST(SampleIndicesTest, Errors) {
    EXPECT_THROW(sample_indices(0, 4, 1), ConfigError);
    EXPECT_THROW(sample_indices(9, 0, 0), ConfigError);
    EXPECT_THROW(sample_indices(9, 4, 5), ConfigError);
    // delta_p = 0 with at least one block repeats frame 0.
    EXPECT_THROW(sample_indices(9, 4, 0), ConfigError);
}

TEST(TakeFramesTest, CopiesSelectedMaps) {
    const Grid4 video = random_grid(5, 2, 3, 3, 11);
    const Grid4 out = take_frames(video, {0, 2, 4});
    ASSERT_EQ(out.s, 3u);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t y = 0; y < 3; ++y)
            for (std::size_t x = 0; x < 3; ++x) {
                EXPECT_EQ(out.at(0, c, y, x), video.at(0, c, y, x));
                EXPECT_EQ(out.at(1, c, y, x), video.at(2, c, y, x));
                EXPECT_EQ(out.at(2, c, y, x), video.at(4, c, y, x));
            }
    EXPECT_THROW(take_frames(video, {}), ConfigError);
    EXPECT_THROW(take_frames(video, {0, 5}), IndexError);
}

TEST(CodecTest, DecodeInvertsImageEncoding) {
    const ToyCausalCodec codec(3, 4, 99);
    const Grid4 frames = random_grid(3, 3, 5, 5, 12, 0.8f);
    const Grid4 back = codec.decode(codec.encode_image(frames));
    EXPECT_LT(test::max_abs_diff(frames, back), 1e-5f);
}

TEST(CodecTest, ConstructionAndShapeErrors) {
    EXPECT_THROW(ToyCausalCodec(0, 4, 1), ConfigError);
    EXPECT_THROW(ToyCausalCodec(3, 0, 1), ConfigError);
    EXPECT_THROW(ToyCausalCodec::planted(3, 4, 1, 0), ConfigError);
    EXPECT_THROW(ToyCausalCodec::planted(3, 4, 1, 5), ConfigError);
    const ToyCausalCodec codec(3, 4, 1);
    const Grid4 wrong = random_grid(2, 2, 3, 3, 13);
    EXPECT_THROW(codec.encode_image(wrong), ShapeError);
    EXPECT_THROW(codec.encode_video(wrong), ShapeError);
    EXPECT_THROW(codec.decode(wrong), ShapeError);
}

TEST(CodecTest, ValuesOutsideLatticeRangeThrow) {
    const ToyCausalCodec codec(2, 2, 7);
    Grid4 frames(1, 2, 2, 2);
    frames.data.assign(frames.data.size(), 100.0f);
    EXPECT_THROW(codec.encode_image(frames), NumericalError);
}

TEST(CodecTest, EncodeVideoIgnoresTrailingPartialBlock) {
    const ToyCausalCodec codec(2, 4, 21);
    Grid4 video = random_grid(10, 2, 3, 3, 22, 0.5f);
    const Grid4 z = codec.encode_video(video);
    ASSERT_EQ(z.s, 3u);
    video.at(9, 0, 0, 0) += 5.0f;
    const Grid4 z2 = codec.encode_video(video);
    EXPECT_TRUE(test::bit_equal(z, z2));
}

TEST(CodecTest, SeedDeterminesMixing) {
    const Grid4 frames = random_grid(2, 3, 4, 4, 31, 0.5f);
    const ToyCausalCodec a(3, 4, 5);
    const ToyCausalCodec b(3, 4, 5);
    const ToyCausalCodec c(3, 4, 6);
    EXPECT_TRUE(test::bit_equal(a.encode_image(frames), b.encode_image(frames)));
    EXPECT_FALSE(test::bit_equal(a.encode_image(frames), c.encode_image(frames)));
}

TEST(DecompositionTest, LatentSplitsExactlyIntoAppearancePlusDynamics) {
    const ToyCausalCodec codec(3, 4, 41);
    const Grid4 video = random_grid(9, 3, 4, 4, 42, 0.5f);
    const Grid4 z = codec.encode_video(video);
    const Grid4 a = appearance(codec, video, 3);
    const Grid4 dyn = dynamic_residual(codec, video, 3);
    ASSERT_TRUE(z.same_dims(a));
    ASSERT_TRUE(z.same_dims(dyn));
    for (std::size_t j = 0; j < z.data.size(); ++j)
        ASSERT_EQ(z.data[j], a.data[j] + dyn.data[j]) << "index " << j;
}

TEST(DecompositionTest, SelfSwapReproducesPlainDecodeBitwise) {
    const ToyCausalCodec codec(3, 4, 51);
    const Grid4 video = random_grid(9, 3, 4, 4, 52, 0.5f);
    const Grid4 swapped = swap_appearance(codec, video, video, 3);
    const Grid4 plain = codec.decode(codec.encode_video(video));
    EXPECT_TRUE(test::bit_equal(swapped, plain));
}

TEST(DecompositionTest, PlantedCodecHasZeroDynamicsAtItsOffset) {
    const ToyCausalCodec codec = ToyCausalCodec::planted(3, 3, 61, 2);
    const Grid4 video = random_grid(10, 3, 4, 4, 62, 0.5f);
    const Grid4 dyn_at = dynamic_residual(codec, video, 2);
    for (float v : dyn_at.data) ASSERT_EQ(v, 0.0f);
    const Grid4 dyn_off = dynamic_residual(codec, video, 1);
    float max_off = 0.0f;
    for (float v : dyn_off.data) max_off = std::max(max_off, std::abs(v));
    EXPECT_GT(max_off, 0.01f);
}

TEST(MeanAbsLossTest, HandValueAndShapeGuard) {
    Grid4 a(1, 1, 1, 4);
    Grid4 b(1, 1, 1, 4);
    a.data = {0.0f, 1.0f, 2.0f, 3.0f};
    b.data = {1.0f, 1.0f, 0.0f, 7.0f};
    EXPECT_DOUBLE_EQ(mean_abs_loss(a, b), (1.0 + 0.0 + 2.0 + 4.0) / 4.0);
    EXPECT_THROW(mean_abs_loss(a, random_grid(1, 1, 2, 2, 71)), ShapeError);
}

TEST(SelectOffsetTest, RecoversPlantedOffsetAcrossSeeds) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const std::size_t planted = 1 + seed % 3;
        const ToyCausalCodec codec = ToyCausalCodec::planted(3, 3, 500 + seed, planted);
        const Grid4 a = random_grid(10, 3, 4, 4, 900 + 2 * seed, 0.5f);
        const Grid4 b = random_grid(10, 3, 4, 4, 901 + 2 * seed, 0.5f);
        EXPECT_EQ(select_offset(codec, a, b, 3), planted) << "seed " << seed;
    }
}

TEST(SelectOffsetTest, TiesBreakTowardLargerOffset) {
    const ToyCausalCodec codec(2, 3, 81);
    const Grid4 a = random_grid(7, 2, 3, 3, 82, 0.5f);
    const Grid4 b = random_grid(7, 2, 3, 3, 83, 0.5f);
    const VideoLoss constant = [](const Grid4&, const Grid4&) { return 1.0; };
    EXPECT_EQ(select_offset(codec, a, b, 3, constant), 3u);
}

TEST(SelectOffsetTest, Errors) {
    const ToyCausalCodec codec(2, 3, 91);
    const Grid4 a = random_grid(7, 2, 3, 3, 92, 0.5f);
    const Grid4 b = random_grid(7, 2, 3, 3, 93, 0.5f);
    EXPECT_THROW(select_offset(codec, a, b, 0), ConfigError);
    EXPECT_THROW(select_offset(codec, a, b, 4), ConfigError);
    EXPECT_THROW(select_offset(codec, a, random_grid(7, 2, 4, 4, 94), 3), ShapeError);
}

}  // namespace
}  // namespace vstyle
