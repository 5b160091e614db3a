#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vstyle/errors.hpp"

namespace vstyle {

// Dense per-transition displacement field, (dy, dx) interleaved, pixel units.
struct FlowField {
    std::size_t h = 0;
    std::size_t w = 0;
    std::vector<float> data;  // h*w*2

    FlowField() = default;
    FlowField(std::size_t h_, std::size_t w_) : h(h_), w(w_), data(h_ * w_ * 2, 0.0f) {}

    float dy(std::size_t y, std::size_t x) const { return data[(y * w + x) * 2]; }
    float dx(std::size_t y, std::size_t x) const { return data[(y * w + x) * 2 + 1]; }
    void set(std::size_t y, std::size_t x, float dy_, float dx_) {
        data[(y * w + x) * 2] = dy_;
        data[(y * w + x) * 2 + 1] = dx_;
    }
};

// T-frame video's transition fields: forward[k] maps frame k to k+1,
// backward[k] maps frame k+1 to k.
struct FlowFieldSequence {
    std::size_t frames = 0;
    std::size_t h = 0;
    std::size_t w = 0;
    std::vector<FlowField> forward;
    std::vector<FlowField> backward;

    static FlowFieldSequence zero(std::size_t frames, std::size_t h, std::size_t w);
    // ShapeError on wrong field counts or dims, InvalidTensor on non-finite values.
    void validate() const;
};

struct Point {
    double y = 0.0;
    double x = 0.0;
};

struct TraceResult {
    Point landing;
    bool valid = false;  // true iff landing lies in [0,h) x [0,w)
};

// Novel-region masks for an ordered reference frame list. 1 = novel (pixel
// not reachable from any earlier reference). The first reference's mask is
// all-zero by convention.
struct ReferenceMask {
    std::size_t h = 0;
    std::size_t w = 0;
    std::vector<std::size_t> frames;             // ascending, first element 0
    std::vector<std::vector<std::uint8_t>> masks;  // one h*w grid per reference
};

// One sparse correspondence: source pixel (s, y, x) lands on (t, y2, x2).
struct MaskEntry {
    std::uint16_t s = 0;
    std::uint16_t y = 0;
    std::uint16_t x = 0;
    std::uint16_t t = 0;
    std::uint16_t y2 = 0;
    std::uint16_t x2 = 0;

    friend auto operator<=>(const MaskEntry&, const MaskEntry&) = default;
};

// Sparse boolean rank-6 tensor over (source frame, source pixel, target
// frame, target pixel), entries sorted lexicographically and unique.
struct CorrespondenceMask {
    std::size_t frames = 0;
    std::size_t h = 0;
    std::size_t w = 0;
    std::vector<MaskEntry> entries;

    bool contains(const MaskEntry& e) const;
    // FormatError on unsorted/duplicate entries or out-of-range coordinates.
    void validate() const;
};

// Transports a continuous point from frame s to frame t by composing
// per-step displacements; the flow at each hop is read at the nearest pixel
// (round half away from zero, clamped into the frame). Intermediate
// positions may leave the frame; only the terminal landing decides validity.
TraceResult trace(const FlowFieldSequence& flows, std::size_t s, Point u, std::size_t t);

// Pixels of frame t hit by some valid trace from any source frame in
// sources. Returned row-major h*w, 1 = covered.
std::vector<std::uint8_t> coverage(const FlowFieldSequence& flows,
                                   const std::vector<std::size_t>& sources, std::size_t t);

// Novel-region mask per reference: the k-th mask (k >= 1) is the complement
// of coverage from all earlier reference frames. ref_frames must be sorted
// ascending starting at 0.
ReferenceMask reference_masks(const FlowFieldSequence& flows,
                              const std::vector<std::size_t>& ref_frames);

// Full correspondence tensor: one entry per (s, u, t) whose trace lands
// in-bounds, at the discretized landing pixel. Self-pairs are the identity.
CorrespondenceMask flow_mask(const FlowFieldSequence& flows);

// Chebyshev-ball dilation of target pixels, clipped to the frame. Source
// coordinates unchanged. Radius 0 returns the input.
CorrespondenceMask dilate(const CorrespondenceMask& m, std::size_t radius);

// Keeps entries whose target pixel is attendable under the reference-mask
// semantics: targets on a non-first reference frame survive only where that
// reference is novel; targets on the first reference frame or on
// non-reference frames always survive.
CorrespondenceMask combine_and(const CorrespondenceMask& flow, const ReferenceMask& ref);

// Reduces a pixel-level correspondence mask to token resolution: frames are
// remapped to latent-map indices via the temporal sampling (stride r, offset
// delta_p; entries on unsampled frames drop out) and pixels OR-pool into
// (py, px) patches.
CorrespondenceMask pool_to_tokens(const CorrespondenceMask& m, std::size_t py, std::size_t px,
                                  std::size_t r, std::size_t delta_p);

// Token-resolution novel masks: OR over each (py, px) patch. Frame indices
// are kept as-is.
ReferenceMask pool_to_tokens(const ReferenceMask& m, std::size_t py, std::size_t px);

// Self-correspondence encoding of novel-region masks so they share the
// sparse-mask container: entry (f, y, x, f, y, x) per novel pixel.
CorrespondenceMask reference_mask_entries(const ReferenceMask& m, std::size_t frames);

// Sparse-mask container: magic "FVM6", u32 frames/h/w, u64 entry count, then
// entries as six little-endian u16, sorted.
void save_mask(const CorrespondenceMask& m, const std::string& path);
CorrespondenceMask load_mask(const std::string& path);

// Flow container: magic "FVFL", u32 frames/h/w, then frames-1 forward fields
// followed by frames-1 backward fields, f32 (dy, dx) interleaved.
void save_flows(const FlowFieldSequence& f, const std::string& path);
FlowFieldSequence load_flows(const std::string& path);

}  // namespace vstyle
