#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <string>

#include "vstyle/schedule.hpp"
#include "vstyle/synthetic.hpp"

namespace vstyle {

enum class ReferencePolicy { kFirstOnly, kFirstMidLast, kAllSampled };

ReferencePolicy parse_policy(const std::string& name);  // ConfigError on unknown names

struct DiagQuery {
    std::size_t frame = 0;  // frame id; must be one of the sampled frames
    std::size_t y = 0;      // token-grid coordinates
    std::size_t x = 0;
};

struct RunConfig {
    std::size_t frames = 9;
    std::size_t height = 16;
    std::size_t width = 16;
    std::size_t channels = 4;
    std::size_t patch_y = 2;
    std::size_t patch_x = 2;
    std::size_t r = 4;
    std::size_t delta_p = 3;
    ReferencePolicy policy = ReferencePolicy::kFirstMidLast;
    ScheduleParams schedule;
    double rho = 0.25;
    std::size_t dilation_radius = 1;
    std::size_t model_blocks = 2;
    std::size_t d_model = 16;
    std::uint64_t model_seed = 0;
    std::size_t inversion_iterations = 4;
    std::string content_path;
    std::string flows_path;
    std::string style_path;
    std::string output_dir;
    DiagQuery diag_query;
    double diag_sigma = 0.5;

    void validate() const;  // ConfigError on inconsistent values
};

// Strict JSON parsing: every section and key is required (the diagnostics
// section included) and unknown keys anywhere are ConfigError.
RunConfig parse_run_config_text(const std::string& json_text);
RunConfig parse_run_config_file(const std::string& path);

struct SyntheticJob {
    SyntheticSpec spec;
    std::string content_path;
    std::string flows_path;
    std::string style_path;
};

// Spec JSON for gen-synthetic: motion/dims/seeds plus output paths. shift
// and amplitude are optional with defaults; unknown keys are ConfigError.
SyntheticJob parse_synthetic_job_text(const std::string& json_text);
SyntheticJob parse_synthetic_job_file(const std::string& path);

// Process exit code for a thrown error: configuration, shape, and index
// problems 2; file problems 3; numerical failures 4; anything else 1.
int cli_exit_code(const std::exception& e);

}  // namespace vstyle
