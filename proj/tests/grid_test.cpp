#include "vstyle/grid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "oracles.hpp"
#include "test_util.hpp"

namespace vstyle {
namespace {

using test::bit_equal;
using test::max_abs_diff;
using test::random_grid;

std::string temp_path(const char* name) {
    return std::string(::testing::TempDir()) + name;
}

TEST(Grid4, ValidateRejectsZeroDimsAndBadLength) {
    Grid4 g(2, 3, 4, 5);
    EXPECT_NO_THROW(g.validate());
    g.data.pop_back();
    EXPECT_THROW(g.validate(), ShapeError);
    Grid4 z;
    EXPECT_THROW(z.validate(), ShapeError);
}

TEST(ChannelStatsTest, MatchesLongDoubleOracle) {
    const Grid4 g = random_grid(3, 2, 7, 5, 11, 2.5f);
    const ChannelStats st = channel_stats(g);
    ASSERT_EQ(st.mean.size(), g.slice_count());
    for (std::size_t i = 0; i < g.slice_count(); ++i) {
        const oracle::SliceMoments m = oracle::slice_moments(g.slice(i), g.slice_size());
        EXPECT_NEAR(st.mean[i], m.mean, 1e-12);
        EXPECT_NEAR(st.std[i], m.stddev, 1e-12);
    }
}

TEST(ChannelStatsTest, RejectsNonFinite) {
    Grid4 g = random_grid(1, 1, 4, 4, 1);
    g.data[5] = std::nanf("");
    EXPECT_THROW(channel_stats(g), InvalidTensor);
    g.data[5] = std::numeric_limits<float>::infinity();
    EXPECT_THROW(channel_stats(g), InvalidTensor);
}

TEST(AdainTest, OutputStatsMatchTarget) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Grid4 x = random_grid(2, 3, 8, 8, seed, 1.5f);
        const Grid4 t = random_grid(2, 3, 8, 8, seed + 100, 0.7f);
        const Grid4 y = adain(x, t);
        const ChannelStats want = channel_stats(t);
        const ChannelStats got = channel_stats(y);
        for (std::size_t i = 0; i < x.slice_count(); ++i) {
            EXPECT_NEAR(got.mean[i], want.mean[i], 1e-5);
            EXPECT_NEAR(got.std[i], want.std[i], 1e-5);
        }
    }
}

TEST(AdainTest, SelfTargetIsNearIdentity) {
    const Grid4 x = random_grid(2, 2, 8, 8, 3);
    const Grid4 y = adain(x, x);
    EXPECT_LT(max_abs_diff(x, y), 1e-6);
}

TEST(AdainTest, MatchesDirectFormula) {
    const Grid4 x = random_grid(1, 2, 6, 6, 7);
    const Grid4 t = random_grid(1, 2, 6, 6, 8, 3.0f);
    const Grid4 y = adain(x, t);
    for (std::size_t i = 0; i < x.slice_count(); ++i) {
        const oracle::SliceMoments mx = oracle::slice_moments(x.slice(i), x.slice_size());
        const oracle::SliceMoments mt = oracle::slice_moments(t.slice(i), t.slice_size());
        for (std::size_t j = 0; j < x.slice_size(); ++j) {
            const double want =
                mt.stddev * (x.slice(i)[j] - mx.mean) / mx.stddev + mt.mean;
            EXPECT_NEAR(y.slice(i)[j], want, 1e-5);
        }
    }
}

TEST(AdainTest, DimensionMismatchThrows) {
    const Grid4 x = random_grid(1, 2, 4, 4, 1);
    const Grid4 t = random_grid(1, 2, 4, 5, 1);
    EXPECT_THROW(adain(x, t), ShapeError);
}

TEST(GridIoTest, RoundTripIsBitExact) {
    const Grid4 g = random_grid(3, 4, 6, 5, 42);
    const std::string path = temp_path("grid_roundtrip.fvg4");
    save_grid(g, path);
    const Grid4 back = load_grid(path);
    EXPECT_TRUE(bit_equal(g, back));
    std::remove(path.c_str());
}

TEST(GridIoTest, MagicBytesArePinned) {
    const Grid4 g = random_grid(1, 1, 2, 2, 0);
    const std::string path = temp_path("grid_magic.fvg4");
    save_grid(g, path);
    std::ifstream is(path, std::ios::binary);
    char magic[4];
    is.read(magic, 4);
    EXPECT_EQ(std::string(magic, 4), "FVG4");
    std::remove(path.c_str());
}

TEST(GridIoTest, TruncatedFileThrowsFormatError) {
    const Grid4 g = random_grid(1, 1, 4, 4, 0);
    const std::string path = temp_path("grid_truncated.fvg4");
    save_grid(g, path);
    std::ifstream is(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    is.close();
    std::ofstream os(path, std::ios::binary);
    os.write(bytes.data(), static_cast<long>(bytes.size() - 3));
    os.close();
    EXPECT_THROW(load_grid(path), FormatError);
    std::remove(path.c_str());
}

TEST(GridIoTest, TrailingBytesThrowFormatError) {
    const Grid4 g = random_grid(1, 1, 4, 4, 0);
    const std::string path = temp_path("grid_trailing.fvg4");
    save_grid(g, path);
    std::ofstream os(path, std::ios::binary | std::ios::app);
    os.put('x');
    os.close();
    EXPECT_THROW(load_grid(path), FormatError);
    std::remove(path.c_str());
}

TEST(GridIoTest, BadMagicThrowsFormatError) {
    const std::string path = temp_path("grid_badmagic.fvg4");
    std::ofstream os(path, std::ios::binary);
    os << "NOPE" << std::string(16, '\0');
    os.close();
    EXPECT_THROW(load_grid(path), FormatError);
    std::remove(path.c_str());
}

TEST(GridIoTest, MissingFileThrowsIoError) {
    EXPECT_THROW(load_grid(temp_path("does_not_exist.fvg4")), IoError);
}

}  // namespace
}  // namespace vstyle
