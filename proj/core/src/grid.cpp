#include "vstyle/grid.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "binio.hpp"

namespace vstyle {

namespace {
constexpr char kGridMagic[4] = {'F', 'V', 'G', '4'};

std::uint32_t dim_u32(std::size_t d) {
    if (d > std::numeric_limits<std::uint32_t>::max())
        throw ShapeError("grid dim exceeds u32 range");
    return static_cast<std::uint32_t>(d);
}
}  // namespace

Grid4::Grid4(std::size_t s_, std::size_t c_, std::size_t h_, std::size_t w_, float fill)
    : s(s_), c(c_), h(h_), w(w_), data(s_ * c_ * h_ * w_, fill) {
    validate();
}

void Grid4::validate() const {
    if (s == 0 || c == 0 || h == 0 || w == 0)
        throw ShapeError("grid dims must all be >= 1");
    if (data.size() != size())
        throw ShapeError("grid data length does not match dims");
}

ChannelStats channel_stats(const Grid4& x) {
    x.validate();
    const std::size_t n = x.slice_size();
    ChannelStats st;
    st.mean.resize(x.slice_count());
    st.std.resize(x.slice_count());
    for (std::size_t i = 0; i < x.slice_count(); ++i) {
        const float* p = x.slice(i);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(p[j]))
                throw InvalidTensor("non-finite value in grid slice " + std::to_string(i));
            sum += p[j];
        }
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = static_cast<double>(p[j]) - mean;
            ss += d * d;
        }
        st.mean[i] = mean;
        st.std[i] = std::sqrt(ss / static_cast<double>(n) + kStatsEpsilon);
    }
    return st;
}

Grid4 adain(const Grid4& x, const Grid4& target) {
    if (!x.same_dims(target)) throw ShapeError("adain: dims mismatch");
    const ChannelStats sx = channel_stats(x);
    const ChannelStats st = channel_stats(target);
    Grid4 out = x;
    const std::size_t n = x.slice_size();
    for (std::size_t i = 0; i < x.slice_count(); ++i) {
        const double scale = st.std[i] / sx.std[i];
        const double mu = sx.mean[i];
        const double shift = st.mean[i];
        float* p = out.slice(i);
        for (std::size_t j = 0; j < n; ++j)
            p[j] = static_cast<float>(scale * (static_cast<double>(p[j]) - mu) + shift);
    }
    return out;
}

void save_grid(const Grid4& x, const std::string& path) {
    x.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(kGridMagic, 4);
    detail::write_u32le(os, dim_u32(x.s));
    detail::write_u32le(os, dim_u32(x.c));
    detail::write_u32le(os, dim_u32(x.h));
    detail::write_u32le(os, dim_u32(x.w));
    for (float v : x.data) detail::write_f32le(os, v);
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

Grid4 load_grid(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    unsigned char magic[4];
    if (!detail::read_exact(is, magic, 4))
        throw FormatError("grid file truncated: " + path);
    if (std::memcmp(magic, kGridMagic, 4) != 0)
        throw FormatError("bad grid magic: " + path);

    std::uint64_t dims[4];
    for (auto& d : dims) d = detail::read_u32le(is, "grid header (" + path + ")");
    std::uint64_t total = 1;
    for (auto d : dims) {
        if (d == 0) throw FormatError("grid header has zero dim: " + path);
        if (total > std::numeric_limits<std::uint64_t>::max() / d)
            throw FormatError("grid header dims overflow: " + path);
        total *= d;
    }

    Grid4 g;
    g.s = static_cast<std::size_t>(dims[0]);
    g.c = static_cast<std::size_t>(dims[1]);
    g.h = static_cast<std::size_t>(dims[2]);
    g.w = static_cast<std::size_t>(dims[3]);
    g.data.resize(static_cast<std::size_t>(total));
    for (auto& v : g.data) v = detail::read_f32le(is, "grid payload (" + path + ")");
    detail::expect_eof(is, "grid file (" + path + ")");
    return g;
}

}  // namespace vstyle
