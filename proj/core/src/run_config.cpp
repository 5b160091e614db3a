#include "vstyle/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <nlohmann/json.hpp>
#include <sstream>

#include "vstyle/codec.hpp"
#include "vstyle/errors.hpp"

namespace vstyle {

using nlohmann::json;

ReferencePolicy parse_policy(const std::string& name) {
    if (name == "first-only") return ReferencePolicy::kFirstOnly;
    if (name == "first-mid-last") return ReferencePolicy::kFirstMidLast;
    if (name == "all-sampled") return ReferencePolicy::kAllSampled;
    throw ConfigError("unsupported reference policy: " + name);
}

namespace {

// Every listed key must be present and no other key may appear.
void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional = {}) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& item : obj.items()) {
        const bool known =
            std::any_of(required.begin(), required.end(),
                        [&](const char* k) { return item.key() == k; }) ||
            std::any_of(optional.begin(), optional.end(),
                        [&](const char* k) { return item.key() == k; });
        if (!known) throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
    }
    for (const char* k : required)
        if (!obj.contains(k)) throw ConfigError("missing key \"" + std::string(k) + "\" in " + where);
}

std::size_t get_size(const json& obj, const std::string& where, const char* key) {
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError(where + "." + key + " must be a non-negative integer");
    return v.get<std::size_t>();
}

long get_long(const json& obj, const std::string& where, const char* key) {
    const json& v = obj.at(key);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
    return v.get<long>();
}

std::uint64_t get_u64(const json& obj, const std::string& where, const char* key) {
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError(where + "." + key + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

double get_double(const json& obj, const std::string& where, const char* key) {
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
    return v.get<double>();
}

std::string get_string(const json& obj, const std::string& where, const char* key) {
    const json& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
    return v.get<std::string>();
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("config is not valid JSON: ") + e.what());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    if (is.bad()) throw IoError("read failed: " + path);
    return buf.str();
}

}  // namespace

void RunConfig::validate() const {
    if (frames == 0 || height == 0 || width == 0 || channels == 0)
        throw ConfigError("video dims must be >= 1");
    if (patch_y == 0 || patch_x == 0 || height % patch_y != 0 || width % patch_x != 0)
        throw ConfigError("patch sizes must divide the video dims");
    if (!(rho > 0.0) || rho > 1.0) throw ConfigError("rho must lie in (0, 1]");
    if (model_blocks == 0 || d_model == 0) throw ConfigError("model dims must be >= 1");
    if (inversion_iterations == 0)
        throw ConfigError("fixed-point iteration count must be >= 1");
    if (!(diag_sigma >= 0.0) || diag_sigma > 1.0)
        throw ConfigError("diagnostics sigma must lie in [0, 1]");
    if (diag_query.y >= height / patch_y || diag_query.x >= width / patch_x)
        throw ConfigError("diagnostics query outside the token grid");

    // Throws when T is inconsistent with r and delta_p or the policy cannot
    // pick distinct references.
    const SampledSequence sampled = sample_indices(frames, r, delta_p);
    if (std::find(sampled.indices.begin(), sampled.indices.end(), diag_query.frame) ==
        sampled.indices.end())
        throw ConfigError("diagnostics frame must be one of the sampled frames");
    make_schedule(schedule).validate();
}

RunConfig parse_run_config_text(const std::string& json_text) {
    const json root = parse_json(json_text);
    check_keys(root, "config",
               {"video", "patch", "sampling", "schedule", "frequency", "masks", "model",
                "inversion", "paths", "diagnostics"});

    RunConfig cfg;
    const json& video = root.at("video");
    check_keys(video, "video", {"frames", "height", "width", "channels"});
    cfg.frames = get_size(video, "video", "frames");
    cfg.height = get_size(video, "video", "height");
    cfg.width = get_size(video, "video", "width");
    cfg.channels = get_size(video, "video", "channels");

    const json& patch = root.at("patch");
    check_keys(patch, "patch", {"y", "x"});
    cfg.patch_y = get_size(patch, "patch", "y");
    cfg.patch_x = get_size(patch, "patch", "x");

    const json& sampling = root.at("sampling");
    check_keys(sampling, "sampling", {"r", "delta_p", "policy"});
    cfg.r = get_size(sampling, "sampling", "r");
    cfg.delta_p = get_size(sampling, "sampling", "delta_p");
    cfg.policy = parse_policy(get_string(sampling, "sampling", "policy"));

    const json& sched = root.at("schedule");
    check_keys(sched, "schedule",
               {"steps", "lambda_start", "lambda_end", "ihc_window_fraction", "beta", "gamma",
                "gamma_window_fraction"});
    cfg.schedule.steps = get_size(sched, "schedule", "steps");
    cfg.schedule.lambda_start = get_double(sched, "schedule", "lambda_start");
    cfg.schedule.lambda_end = get_double(sched, "schedule", "lambda_end");
    cfg.schedule.ihc_window_fraction = get_double(sched, "schedule", "ihc_window_fraction");
    cfg.schedule.beta = get_double(sched, "schedule", "beta");
    cfg.schedule.gamma = get_double(sched, "schedule", "gamma");
    cfg.schedule.gamma_window_fraction = get_double(sched, "schedule", "gamma_window_fraction");

    const json& freq = root.at("frequency");
    check_keys(freq, "frequency", {"rho"});
    cfg.rho = get_double(freq, "frequency", "rho");

    const json& masks = root.at("masks");
    check_keys(masks, "masks", {"dilation_radius"});
    cfg.dilation_radius = get_size(masks, "masks", "dilation_radius");

    const json& model = root.at("model");
    check_keys(model, "model", {"blocks", "d_model", "seed"});
    cfg.model_blocks = get_size(model, "model", "blocks");
    cfg.d_model = get_size(model, "model", "d_model");
    cfg.model_seed = get_u64(model, "model", "seed");

    const json& inv = root.at("inversion");
    check_keys(inv, "inversion", {"iterations"});
    cfg.inversion_iterations = get_size(inv, "inversion", "iterations");

    const json& paths = root.at("paths");
    check_keys(paths, "paths", {"content", "flows", "style", "output_dir"});
    cfg.content_path = get_string(paths, "paths", "content");
    cfg.flows_path = get_string(paths, "paths", "flows");
    cfg.style_path = get_string(paths, "paths", "style");
    cfg.output_dir = get_string(paths, "paths", "output_dir");

    const json& diag = root.at("diagnostics");
    check_keys(diag, "diagnostics", {"frame", "y", "x", "sigma"});
    cfg.diag_query.frame = get_size(diag, "diagnostics", "frame");
    cfg.diag_query.y = get_size(diag, "diagnostics", "y");
    cfg.diag_query.x = get_size(diag, "diagnostics", "x");
    cfg.diag_sigma = get_double(diag, "diagnostics", "sigma");

    cfg.validate();
    return cfg;
}

RunConfig parse_run_config_file(const std::string& path) {
    return parse_run_config_text(read_file(path));
}

SyntheticJob parse_synthetic_job_text(const std::string& json_text) {
    const json root = parse_json(json_text);
    check_keys(root, "spec", {"motion", "video", "seeds", "paths"}, {"shift", "amplitude"});

    SyntheticJob job;
    job.spec.motion = parse_motion(get_string(root, "spec", "motion"));

    const json& video = root.at("video");
    check_keys(video, "video", {"frames", "height", "width", "channels"});
    job.spec.frames = get_size(video, "video", "frames");
    job.spec.height = get_size(video, "video", "height");
    job.spec.width = get_size(video, "video", "width");
    job.spec.channels = get_size(video, "video", "channels");

    const json& seeds = root.at("seeds");
    check_keys(seeds, "seeds", {"content", "style"});
    job.spec.seed = get_u64(seeds, "seeds", "content");
    job.spec.style_seed = get_u64(seeds, "seeds", "style");

    if (root.contains("shift")) {
        const json& shift = root.at("shift");
        check_keys(shift, "shift", {"dy", "dx"});
        job.spec.shift_dy = get_long(shift, "shift", "dy");
        job.spec.shift_dx = get_long(shift, "shift", "dx");
    }
    if (root.contains("amplitude"))
        job.spec.amplitude = get_double(root, "spec", "amplitude");

    const json& paths = root.at("paths");
    check_keys(paths, "paths", {"content", "flows", "style"});
    job.content_path = get_string(paths, "paths", "content");
    job.flows_path = get_string(paths, "paths", "flows");
    job.style_path = get_string(paths, "paths", "style");
    return job;
}

SyntheticJob parse_synthetic_job_file(const std::string& path) {
    return parse_synthetic_job_text(read_file(path));
}

int cli_exit_code(const std::exception& e) {
    if (dynamic_cast<const NumericalError*>(&e) != nullptr) return 4;
    if (dynamic_cast<const FormatError*>(&e) != nullptr ||
        dynamic_cast<const IoError*>(&e) != nullptr)
        return 3;
    if (dynamic_cast<const ConfigError*>(&e) != nullptr ||
        dynamic_cast<const ShapeError*>(&e) != nullptr ||
        dynamic_cast<const IndexError*>(&e) != nullptr ||
        dynamic_cast<const InvalidTensor*>(&e) != nullptr)
        return 2;
    return 1;
}

}  // namespace vstyle
