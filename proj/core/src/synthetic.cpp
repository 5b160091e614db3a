#include "vstyle/synthetic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "vstyle/rng.hpp"

namespace vstyle {

MotionKind parse_motion(const std::string& name) {
    if (name == "static") return MotionKind::kStatic;
    if (name == "uniform-shift") return MotionKind::kUniformShift;
    if (name == "swirl") return MotionKind::kSwirl;
    throw ConfigError("unsupported motion: " + name);
}

namespace {

double bilinear(const Grid4& g, std::size_t map, std::size_t ch, double y, double x) {
    const double yc = std::clamp(y, 0.0, static_cast<double>(g.h - 1));
    const double xc = std::clamp(x, 0.0, static_cast<double>(g.w - 1));
    const auto y0 = static_cast<std::size_t>(yc);
    const auto x0 = static_cast<std::size_t>(xc);
    const std::size_t y1 = std::min(y0 + 1, g.h - 1);
    const std::size_t x1 = std::min(x0 + 1, g.w - 1);
    const double fy = yc - static_cast<double>(y0);
    const double fx = xc - static_cast<double>(x0);
    const double a = static_cast<double>(g.at(map, ch, y0, x0));
    const double b = static_cast<double>(g.at(map, ch, y0, x1));
    const double c = static_cast<double>(g.at(map, ch, y1, x0));
    const double d = static_cast<double>(g.at(map, ch, y1, x1));
    return (1.0 - fy) * ((1.0 - fx) * a + fx * b) + fy * ((1.0 - fx) * c + fx * d);
}

void fill_frame(Grid4& g, std::size_t map, SeededGaussian& rng) {
    for (std::size_t ch = 0; ch < g.c; ++ch)
        for (std::size_t y = 0; y < g.h; ++y)
            for (std::size_t x = 0; x < g.w; ++x)
                g.at(map, ch, y, x) = static_cast<float>(rng.next());
}

}  // namespace

SyntheticVideo gen_synthetic(const SyntheticSpec& spec) {
    if (spec.frames == 0 || spec.height == 0 || spec.width == 0 || spec.channels == 0)
        throw ConfigError("synthetic dims must be >= 1");

    SyntheticVideo out;
    out.content = Grid4(spec.frames, spec.channels, spec.height, spec.width);
    out.flows = FlowFieldSequence::zero(spec.frames, spec.height, spec.width);
    SeededGaussian rng(spec.seed);

    switch (spec.motion) {
        case MotionKind::kStatic: {
            fill_frame(out.content, 0, rng);
            for (std::size_t k = 1; k < spec.frames; ++k)
                for (std::size_t ch = 0; ch < spec.channels; ++ch)
                    for (std::size_t y = 0; y < spec.height; ++y)
                        for (std::size_t x = 0; x < spec.width; ++x)
                            out.content.at(k, ch, y, x) = out.content.at(0, ch, y, x);
            break;
        }
        case MotionKind::kUniformShift: {
            fill_frame(out.content, 0, rng);
            const long dy = spec.shift_dy;
            const long dx = spec.shift_dx;
            for (std::size_t k = 1; k < spec.frames; ++k)
                for (std::size_t y = 0; y < spec.height; ++y)
                    for (std::size_t x = 0; x < spec.width; ++x) {
                        const long sy = static_cast<long>(y) - dy;
                        const long sx = static_cast<long>(x) - dx;
                        const bool inside = sy >= 0 && sx >= 0 &&
                                            sy < static_cast<long>(spec.height) &&
                                            sx < static_cast<long>(spec.width);
                        for (std::size_t ch = 0; ch < spec.channels; ++ch)
                            out.content.at(k, ch, y, x) =
                                inside ? out.content.at(k - 1, ch, static_cast<std::size_t>(sy),
                                                        static_cast<std::size_t>(sx))
                                       : static_cast<float>(rng.next());
                    }
            for (std::size_t k = 0; k + 1 < spec.frames; ++k)
                for (std::size_t y = 0; y < spec.height; ++y)
                    for (std::size_t x = 0; x < spec.width; ++x) {
                        out.flows.forward[k].set(y, x, static_cast<float>(dy),
                                                 static_cast<float>(dx));
                        out.flows.backward[k].set(y, x, static_cast<float>(-dy),
                                                  static_cast<float>(-dx));
                    }
            break;
        }
        case MotionKind::kSwirl: {
            if (!(spec.amplitude >= 0.0) || spec.amplitude > 2.0)
                throw ConfigError("swirl amplitude must lie in [0, 2]");
            fill_frame(out.content, 0, rng);
            const double two_pi = 2.0 * std::acos(-1.0);
            const double hw_ratio =
                static_cast<double>(spec.height) / static_cast<double>(spec.width);
            auto field_y = [&](std::size_t y, std::size_t x) {
                return spec.amplitude * std::cos(two_pi * y / spec.height) *
                       std::sin(two_pi * x / spec.width);
            };
            auto field_x = [&](std::size_t y, std::size_t x) {
                return spec.amplitude * hw_ratio * std::sin(two_pi * y / spec.height) *
                       std::cos(two_pi * x / spec.width);
            };
            for (std::size_t k = 1; k < spec.frames; ++k)
                for (std::size_t y = 0; y < spec.height; ++y)
                    for (std::size_t x = 0; x < spec.width; ++x) {
                        const double fy = field_y(y, x);
                        const double fx = field_x(y, x);
                        for (std::size_t ch = 0; ch < spec.channels; ++ch)
                            out.content.at(k, ch, y, x) = static_cast<float>(bilinear(
                                out.content, k - 1, ch, static_cast<double>(y) - fy,
                                static_cast<double>(x) - fx));
                    }
            for (std::size_t k = 0; k + 1 < spec.frames; ++k)
                for (std::size_t y = 0; y < spec.height; ++y)
                    for (std::size_t x = 0; x < spec.width; ++x) {
                        out.flows.forward[k].set(y, x, static_cast<float>(field_y(y, x)),
                                                 static_cast<float>(field_x(y, x)));
                        out.flows.backward[k].set(y, x, static_cast<float>(-field_y(y, x)),
                                                  static_cast<float>(-field_x(y, x)));
                    }
            break;
        }
    }

    // Stylized copy: seeded orthonormal channel mix plus a channel bias.
    SeededGaussian style_rng(spec.style_seed);
    const auto c = static_cast<Eigen::Index>(spec.channels);
    Eigen::MatrixXd a(c, c);
    style_rng.fill(a, 1.0);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::MatrixXd mix = qr.householderQ() * Eigen::MatrixXd::Identity(c, c);
    Eigen::VectorXd bias(c);
    style_rng.fill(bias, 0.3);

    out.style = out.content;
    Eigen::VectorXd pix(c);
    for (std::size_t k = 0; k < spec.frames; ++k)
        for (std::size_t y = 0; y < spec.height; ++y)
            for (std::size_t x = 0; x < spec.width; ++x) {
                for (std::size_t ch = 0; ch < spec.channels; ++ch)
                    pix(static_cast<Eigen::Index>(ch)) =
                        static_cast<double>(out.content.at(k, ch, y, x));
                const Eigen::VectorXd styled = mix * pix + bias;
                for (std::size_t ch = 0; ch < spec.channels; ++ch)
                    out.style.at(k, ch, y, x) =
                        static_cast<float>(styled(static_cast<Eigen::Index>(ch)));
            }
    return out;
}

}  // namespace vstyle
