#include "vstyle/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "binio.hpp"
#include "vstyle/codec.hpp"

namespace vstyle {

namespace {

constexpr char kMaskMagic[4] = {'F', 'V', 'M', '6'};
constexpr char kFlowMagic[4] = {'F', 'V', 'F', 'L'};

long clamp_index(double v, std::size_t dim) {
    const long rounded = static_cast<long>(std::round(v));
    return std::clamp(rounded, 0L, static_cast<long>(dim) - 1);
}

std::uint16_t to_u16(std::size_t v, const char* what) {
    if (v > std::numeric_limits<std::uint16_t>::max())
        throw ShapeError(std::string(what) + " exceeds u16 range");
    return static_cast<std::uint16_t>(v);
}

void sort_unique(std::vector<MaskEntry>& entries) {
    std::sort(entries.begin(), entries.end());
    entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
}

}  // namespace

FlowFieldSequence FlowFieldSequence::zero(std::size_t frames, std::size_t h, std::size_t w) {
    FlowFieldSequence f;
    f.frames = frames;
    f.h = h;
    f.w = w;
    if (frames == 0) throw ShapeError("flow sequence needs at least one frame");
    f.forward.assign(frames - 1, FlowField(h, w));
    f.backward.assign(frames - 1, FlowField(h, w));
    return f;
}

void FlowFieldSequence::validate() const {
    if (frames == 0 || h == 0 || w == 0)
        throw ShapeError("flow sequence dims must be >= 1");
    if (forward.size() != frames - 1 || backward.size() != frames - 1)
        throw ShapeError("flow sequence needs frames-1 fields per direction");
    for (const auto* group : {&forward, &backward})
        for (const auto& f : *group) {
            if (f.h != h || f.w != w || f.data.size() != h * w * 2)
                throw ShapeError("flow field dims do not match the sequence");
            for (float v : f.data)
                if (!std::isfinite(v)) throw InvalidTensor("non-finite flow value");
        }
}

bool CorrespondenceMask::contains(const MaskEntry& e) const {
    return std::binary_search(entries.begin(), entries.end(), e);
}

void CorrespondenceMask::validate() const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const MaskEntry& e = entries[i];
        if (e.s >= frames || e.t >= frames || e.y >= h || e.y2 >= h || e.x >= w || e.x2 >= w)
            throw FormatError("mask entry coordinates out of range");
        if (i > 0 && !(entries[i - 1] < e))
            throw FormatError("mask entries not sorted and unique");
    }
}

TraceResult trace(const FlowFieldSequence& flows, std::size_t s, Point u, std::size_t t) {
    if (s >= flows.frames || t >= flows.frames)
        throw IndexError("trace frame index out of range");
    Point p = u;
    if (s < t) {
        for (std::size_t k = s; k < t; ++k) {
            const FlowField& f = flows.forward[k];
            const long py = clamp_index(p.y, flows.h);
            const long px = clamp_index(p.x, flows.w);
            p.y += f.dy(static_cast<std::size_t>(py), static_cast<std::size_t>(px));
            p.x += f.dx(static_cast<std::size_t>(py), static_cast<std::size_t>(px));
        }
    } else if (s > t) {
        for (std::size_t k = s; k > t; --k) {
            const FlowField& f = flows.backward[k - 1];
            const long py = clamp_index(p.y, flows.h);
            const long px = clamp_index(p.x, flows.w);
            p.y += f.dy(static_cast<std::size_t>(py), static_cast<std::size_t>(px));
            p.x += f.dx(static_cast<std::size_t>(py), static_cast<std::size_t>(px));
        }
    }
    const bool valid = p.y >= 0.0 && p.y < static_cast<double>(flows.h) && p.x >= 0.0 &&
                       p.x < static_cast<double>(flows.w);
    return {p, valid};
}

std::vector<std::uint8_t> coverage(const FlowFieldSequence& flows,
                                   const std::vector<std::size_t>& sources, std::size_t t) {
    if (sources.empty()) throw ConfigError("coverage needs at least one source frame");
    if (t >= flows.frames) throw IndexError("coverage target frame out of range");
    std::vector<std::uint8_t> grid(flows.h * flows.w, 0);
    for (std::size_t a : sources) {
        if (a >= flows.frames) throw IndexError("coverage source frame out of range");
        for (std::size_t y = 0; y < flows.h; ++y)
            for (std::size_t x = 0; x < flows.w; ++x) {
                const TraceResult r =
                    trace(flows, a, {static_cast<double>(y), static_cast<double>(x)}, t);
                if (!r.valid) continue;
                const long ly = clamp_index(r.landing.y, flows.h);
                const long lx = clamp_index(r.landing.x, flows.w);
                grid[static_cast<std::size_t>(ly) * flows.w + static_cast<std::size_t>(lx)] = 1;
            }
    }
    return grid;
}

ReferenceMask reference_masks(const FlowFieldSequence& flows,
                              const std::vector<std::size_t>& ref_frames) {
    flows.validate();
    if (ref_frames.empty() || ref_frames.front() != 0)
        throw ConfigError("reference frames must start at frame 0");
    for (std::size_t i = 1; i < ref_frames.size(); ++i)
        if (ref_frames[i] <= ref_frames[i - 1])
            throw ConfigError("reference frames must be sorted ascending without duplicates");
    for (std::size_t f : ref_frames)
        if (f >= flows.frames) throw IndexError("reference frame out of range");

    ReferenceMask out;
    out.h = flows.h;
    out.w = flows.w;
    out.frames = ref_frames;
    out.masks.resize(ref_frames.size());
    out.masks[0].assign(flows.h * flows.w, 0);
    for (std::size_t k = 1; k < ref_frames.size(); ++k) {
        const std::vector<std::size_t> earlier(ref_frames.begin(),
                                               ref_frames.begin() + static_cast<long>(k));
        const std::vector<std::uint8_t> cov = coverage(flows, earlier, ref_frames[k]);
        auto& mask = out.masks[k];
        mask.resize(cov.size());
        for (std::size_t i = 0; i < cov.size(); ++i) mask[i] = cov[i] ? 0 : 1;
    }
    return out;
}

CorrespondenceMask flow_mask(const FlowFieldSequence& flows) {
    flows.validate();
    CorrespondenceMask m;
    m.frames = flows.frames;
    m.h = flows.h;
    m.w = flows.w;
    to_u16(flows.frames - 1, "frame index");
    to_u16(flows.h - 1, "row index");
    to_u16(flows.w - 1, "column index");
    for (std::size_t s = 0; s < flows.frames; ++s)
        for (std::size_t y = 0; y < flows.h; ++y)
            for (std::size_t x = 0; x < flows.w; ++x)
                for (std::size_t t = 0; t < flows.frames; ++t) {
                    if (s == t) {
                        m.entries.push_back({static_cast<std::uint16_t>(s),
                                             static_cast<std::uint16_t>(y),
                                             static_cast<std::uint16_t>(x),
                                             static_cast<std::uint16_t>(t),
                                             static_cast<std::uint16_t>(y),
                                             static_cast<std::uint16_t>(x)});
                        continue;
                    }
                    const TraceResult r =
                        trace(flows, s, {static_cast<double>(y), static_cast<double>(x)}, t);
                    if (!r.valid) continue;
                    const long ly = clamp_index(r.landing.y, flows.h);
                    const long lx = clamp_index(r.landing.x, flows.w);
                    m.entries.push_back({static_cast<std::uint16_t>(s),
                                         static_cast<std::uint16_t>(y),
                                         static_cast<std::uint16_t>(x),
                                         static_cast<std::uint16_t>(t),
                                         static_cast<std::uint16_t>(ly),
                                         static_cast<std::uint16_t>(lx)});
                }
    // The (s, y, x, t) loop order with one landing per prefix already yields
    // lexicographic order.
    return m;
}

CorrespondenceMask dilate(const CorrespondenceMask& m, std::size_t radius) {
    if (radius == 0) return m;
    CorrespondenceMask out;
    out.frames = m.frames;
    out.h = m.h;
    out.w = m.w;
    const long r = static_cast<long>(radius);
    out.entries.reserve(m.entries.size() * (2 * radius + 1) * (2 * radius + 1));
    for (const MaskEntry& e : m.entries)
        for (long dy = -r; dy <= r; ++dy)
            for (long dx = -r; dx <= r; ++dx) {
                const long ny = static_cast<long>(e.y2) + dy;
                const long nx = static_cast<long>(e.x2) + dx;
                if (ny < 0 || nx < 0 || ny >= static_cast<long>(m.h) ||
                    nx >= static_cast<long>(m.w))
                    continue;
                out.entries.push_back({e.s, e.y, e.x, e.t, static_cast<std::uint16_t>(ny),
                                       static_cast<std::uint16_t>(nx)});
            }
    sort_unique(out.entries);
    return out;
}

CorrespondenceMask combine_and(const CorrespondenceMask& flow, const ReferenceMask& ref) {
    if (!ref.frames.empty() && (ref.h != flow.h || ref.w != flow.w))
        throw ShapeError("combine_and: mask dims mismatch");
    std::unordered_map<std::size_t, std::size_t> ref_slot;  // frame -> mask index
    for (std::size_t k = 0; k < ref.frames.size(); ++k) ref_slot.emplace(ref.frames[k], k);

    CorrespondenceMask out;
    out.frames = flow.frames;
    out.h = flow.h;
    out.w = flow.w;
    for (const MaskEntry& e : flow.entries) {
        const auto it = ref_slot.find(e.t);
        // Targets on non-reference frames or on the first reference are
        // unconstrained; other references admit only their novel region.
        if (it != ref_slot.end() && it->second != 0 &&
            ref.masks[it->second][static_cast<std::size_t>(e.y2) * ref.w + e.x2] == 0)
            continue;
        out.entries.push_back(e);
    }
    return out;
}

CorrespondenceMask pool_to_tokens(const CorrespondenceMask& m, std::size_t py, std::size_t px,
                                  std::size_t r, std::size_t delta_p) {
    if (py == 0 || px == 0 || m.h % py != 0 || m.w % px != 0)
        throw ShapeError("patch sizes must divide the pixel dims");
    const SampledSequence sampled = sample_indices(m.frames, r, delta_p);
    std::unordered_map<std::size_t, std::size_t> map_of;  // frame -> latent map index
    for (std::size_t i = 0; i < sampled.indices.size(); ++i) map_of.emplace(sampled.indices[i], i);

    CorrespondenceMask out;
    out.frames = sampled.indices.size();
    out.h = m.h / py;
    out.w = m.w / px;
    for (const MaskEntry& e : m.entries) {
        const auto si = map_of.find(e.s);
        const auto ti = map_of.find(e.t);
        if (si == map_of.end() || ti == map_of.end()) continue;
        out.entries.push_back({to_u16(si->second, "map index"),
                               static_cast<std::uint16_t>(e.y / py),
                               static_cast<std::uint16_t>(e.x / px),
                               to_u16(ti->second, "map index"),
                               static_cast<std::uint16_t>(e.y2 / py),
                               static_cast<std::uint16_t>(e.x2 / px)});
    }
    sort_unique(out.entries);
    return out;
}

ReferenceMask pool_to_tokens(const ReferenceMask& m, std::size_t py, std::size_t px) {
    if (py == 0 || px == 0 || m.h % py != 0 || m.w % px != 0)
        throw ShapeError("patch sizes must divide the pixel dims");
    ReferenceMask out;
    out.h = m.h / py;
    out.w = m.w / px;
    out.frames = m.frames;
    out.masks.resize(m.masks.size());
    for (std::size_t k = 0; k < m.masks.size(); ++k) {
        out.masks[k].assign(out.h * out.w, 0);
        for (std::size_t y = 0; y < m.h; ++y)
            for (std::size_t x = 0; x < m.w; ++x)
                if (m.masks[k][y * m.w + x])
                    out.masks[k][(y / py) * out.w + (x / px)] = 1;
    }
    return out;
}

CorrespondenceMask reference_mask_entries(const ReferenceMask& m, std::size_t frames) {
    CorrespondenceMask out;
    out.frames = frames;
    out.h = m.h;
    out.w = m.w;
    for (std::size_t k = 0; k < m.frames.size(); ++k) {
        const auto f = to_u16(m.frames[k], "frame index");
        for (std::size_t y = 0; y < m.h; ++y)
            for (std::size_t x = 0; x < m.w; ++x)
                if (m.masks[k][y * m.w + x])
                    out.entries.push_back({f, static_cast<std::uint16_t>(y),
                                           static_cast<std::uint16_t>(x), f,
                                           static_cast<std::uint16_t>(y),
                                           static_cast<std::uint16_t>(x)});
    }
    sort_unique(out.entries);
    return out;
}

void save_mask(const CorrespondenceMask& m, const std::string& path) {
    m.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(kMaskMagic, 4);
    detail::write_u32le(os, static_cast<std::uint32_t>(m.frames));
    detail::write_u32le(os, static_cast<std::uint32_t>(m.h));
    detail::write_u32le(os, static_cast<std::uint32_t>(m.w));
    detail::write_u64le(os, static_cast<std::uint64_t>(m.entries.size()));
    for (const MaskEntry& e : m.entries) {
        detail::write_u16le(os, e.s);
        detail::write_u16le(os, e.y);
        detail::write_u16le(os, e.x);
        detail::write_u16le(os, e.t);
        detail::write_u16le(os, e.y2);
        detail::write_u16le(os, e.x2);
    }
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

CorrespondenceMask load_mask(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    unsigned char magic[4];
    if (!detail::read_exact(is, magic, 4)) throw FormatError("mask file truncated: " + path);
    if (std::memcmp(magic, kMaskMagic, 4) != 0) throw FormatError("bad mask magic: " + path);
    CorrespondenceMask m;
    const std::string what = "mask file (" + path + ")";
    m.frames = detail::read_u32le(is, what);
    m.h = detail::read_u32le(is, what);
    m.w = detail::read_u32le(is, what);
    const std::uint64_t count = detail::read_u64le(is, what);
    m.entries.resize(static_cast<std::size_t>(count));
    for (auto& e : m.entries) {
        e.s = detail::read_u16le(is, what);
        e.y = detail::read_u16le(is, what);
        e.x = detail::read_u16le(is, what);
        e.t = detail::read_u16le(is, what);
        e.y2 = detail::read_u16le(is, what);
        e.x2 = detail::read_u16le(is, what);
    }
    detail::expect_eof(is, what);
    m.validate();
    return m;
}

void save_flows(const FlowFieldSequence& f, const std::string& path) {
    f.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(kFlowMagic, 4);
    detail::write_u32le(os, static_cast<std::uint32_t>(f.frames));
    detail::write_u32le(os, static_cast<std::uint32_t>(f.h));
    detail::write_u32le(os, static_cast<std::uint32_t>(f.w));
    for (const auto* group : {&f.forward, &f.backward})
        for (const FlowField& field : *group)
            for (float v : field.data) detail::write_f32le(os, v);
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

FlowFieldSequence load_flows(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    unsigned char magic[4];
    if (!detail::read_exact(is, magic, 4)) throw FormatError("flow file truncated: " + path);
    if (std::memcmp(magic, kFlowMagic, 4) != 0) throw FormatError("bad flow magic: " + path);
    const std::string what = "flow file (" + path + ")";
    FlowFieldSequence f;
    f.frames = detail::read_u32le(is, what);
    f.h = detail::read_u32le(is, what);
    f.w = detail::read_u32le(is, what);
    if (f.frames == 0 || f.h == 0 || f.w == 0)
        throw FormatError("flow header has zero dim: " + path);
    f.forward.assign(f.frames - 1, FlowField(f.h, f.w));
    f.backward.assign(f.frames - 1, FlowField(f.h, f.w));
    for (auto* group : {&f.forward, &f.backward})
        for (FlowField& field : *group)
            for (auto& v : field.data) v = detail::read_f32le(is, what);
    detail::expect_eof(is, what);
    f.validate();
    return f;
}

}  // namespace vstyle
