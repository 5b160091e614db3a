#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "vstyle/flow.hpp"
#include "vstyle/grid.hpp"

namespace vstyle {

enum class MotionKind { kStatic, kUniformShift, kSwirl };

struct SyntheticSpec {
    MotionKind motion = MotionKind::kStatic;
    std::size_t frames = 9;
    std::size_t height = 16;
    std::size_t width = 16;
    std::size_t channels = 4;
    std::uint64_t seed = 1;
    std::uint64_t style_seed = 2;
    // uniform-shift: integer per-step displacement.
    long shift_dy = 0;
    long shift_dx = 1;
    // swirl: scales the displacement field (kept below ~2 px).
    double amplitude = 1.0;
};

struct SyntheticVideo {
    Grid4 content;           // frames maps of channels x height x width
    FlowFieldSequence flows;
    Grid4 style;             // content passed through a seeded channel mix
};

// Builds a toy video whose frames follow the declared motion together with
// the matching transition fields, plus a stylized copy produced by a seeded
// channel-mixing map. static: identical frames, zero flow. uniform-shift:
// each frame is the previous shifted by (shift_dy, shift_dx) with revealed
// borders filled by seeded noise; flows are constant. swirl: frames advect
// through a smooth curl-free displacement field via bilinear resampling.
SyntheticVideo gen_synthetic(const SyntheticSpec& spec);

MotionKind parse_motion(const std::string& name);  // ConfigError on unknown names

}  // namespace vstyle
