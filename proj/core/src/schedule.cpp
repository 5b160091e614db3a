#include "vstyle/schedule.hpp"

#include <cmath>

namespace vstyle {

GuidanceSchedule make_schedule(const ScheduleParams& p) {
    if (p.steps == 0) throw ConfigError("schedule needs at least one step");
    if (!(p.beta >= 0.0) || !(p.gamma >= 0.0) || p.beta + p.gamma > 1.0)
        throw ConfigError("schedule needs beta, gamma >= 0 with beta + gamma <= 1");
    if (!(p.lambda_start >= 0.0) || !(p.lambda_end >= 0.0))
        throw ConfigError("lambda endpoints must be >= 0");
    if (p.lambda_end > p.lambda_start)
        throw ConfigError("lambda must not increase over the window");
    if (p.ihc_window_fraction < 0.0 || p.ihc_window_fraction > 1.0 ||
        p.gamma_window_fraction < 0.0 || p.gamma_window_fraction > 1.0)
        throw ConfigError("window fractions must lie in [0, 1]");

    GuidanceSchedule s;
    s.steps = p.steps;
    s.sigmas.resize(p.steps + 1);
    for (std::size_t i = 0; i <= p.steps; ++i)
        s.sigmas[i] = 1.0 - static_cast<double>(i) / static_cast<double>(p.steps);
    s.sigmas.back() = 0.0;

    s.ihc_end = static_cast<std::size_t>(
        std::llround(p.ihc_window_fraction * static_cast<double>(p.steps)));
    s.lambda.assign(p.steps, 0.0);
    for (std::size_t t = 0; t < s.ihc_end; ++t) {
        const double frac = s.ihc_end > 1
                                ? static_cast<double>(t) / static_cast<double>(s.ihc_end - 1)
                                : 0.0;
        s.lambda[t] = p.lambda_start + (p.lambda_end - p.lambda_start) * frac;
    }

    s.xi.resize(p.steps);
    if (p.steps == 1) {
        s.xi[0] = 1.0;
    } else {
        for (std::size_t t = 0; t < p.steps; ++t)
            s.xi[t] = static_cast<double>(t) / static_cast<double>(p.steps - 1);
    }

    s.beta = p.beta;
    s.gamma_begin = p.steps - static_cast<std::size_t>(std::llround(
                                  p.gamma_window_fraction * static_cast<double>(p.steps)));
    s.gamma.assign(p.steps, 0.0);
    for (std::size_t t = s.gamma_begin; t < p.steps; ++t) s.gamma[t] = p.gamma;

    s.validate();
    return s;
}

void GuidanceSchedule::validate() const {
    if (steps == 0 || sigmas.size() != steps + 1 || lambda.size() != steps ||
        xi.size() != steps || gamma.size() != steps)
        throw ConfigError("schedule arrays inconsistent with step count");
    if (sigmas.front() != 1.0 || sigmas.back() != 0.0)
        throw ConfigError("sigma grid must run from 1 to 0");
    for (std::size_t i = 0; i + 1 < sigmas.size(); ++i)
        if (sigmas[i + 1] >= sigmas[i]) throw ConfigError("sigma grid must strictly decrease");
    for (std::size_t t = 0; t < steps; ++t) {
        if (!(lambda[t] >= 0.0)) throw ConfigError("lambda must be >= 0");
        if (t >= ihc_end && lambda[t] != 0.0)
            throw ConfigError("lambda must vanish outside the compensation window");
        if (t + 1 < ihc_end && lambda[t + 1] > lambda[t])
            throw ConfigError("lambda must be non-increasing inside the window");
        if (t < gamma_begin && gamma[t] != 0.0)
            throw ConfigError("gamma must vanish before its window");
    }
    if (steps >= 2 && (xi.front() != 0.0 || xi.back() != 1.0))
        throw ConfigError("xi must run from 0 to 1");
    double max_gamma = 0.0;
    for (double g : gamma) max_gamma = std::max(max_gamma, g);
    if (beta < 0.0 || beta + max_gamma > 1.0)
        throw ConfigError("beta + max gamma must stay within [0, 1]");
}

}  // namespace vstyle
