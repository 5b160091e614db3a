#pragma once

#include <cstddef>
#include <vector>

#include "vstyle/errors.hpp"

namespace vstyle {

struct ScheduleParams {
    std::size_t steps = 8;
    double lambda_start = 1.0;
    double lambda_end = 0.0;
    double ihc_window_fraction = 0.4;   // leading fraction of steps with compensation
    double beta = 0.3;
    double gamma = 0.2;
    double gamma_window_fraction = 0.25;  // trailing fraction of steps with gamma active
};

// Per-step guidance weights over a linear sigma grid. Step index 0 is the
// noisiest step.
struct GuidanceSchedule {
    std::size_t steps = 0;
    std::vector<double> sigmas;  // steps + 1 values, 1 down to 0
    std::vector<double> lambda;  // per step, 0 outside [0, ihc_end)
    std::size_t ihc_end = 0;
    std::vector<double> xi;      // linear 0 -> 1 over steps
    double beta = 0.0;
    std::vector<double> gamma;   // 0 before gamma_begin
    std::size_t gamma_begin = 0;

    double sigma(std::size_t i) const { return sigmas[i]; }
    double lambda_at(std::size_t t) const { return t < lambda.size() ? lambda[t] : 0.0; }
    double xi_at(std::size_t t) const { return xi[t]; }
    double gamma_at(std::size_t t) const { return gamma[t]; }

    // Asserts the structural invariants (endpoint sigmas, xi endpoints,
    // lambda zero outside its window, gamma zero before its window,
    // beta + max gamma <= 1). ConfigError on violation.
    void validate() const;
};

// ConfigError on steps = 0, negative weights, beta + gamma > 1, fractions
// outside [0, 1], or lambda_end > lambda_start.
GuidanceSchedule make_schedule(const ScheduleParams& p);

}  // namespace vstyle
