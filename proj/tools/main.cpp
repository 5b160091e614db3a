#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "vstyle/codec.hpp"
#include "vstyle/flow.hpp"
#include "vstyle/frequency.hpp"
#include "vstyle/grid.hpp"
#include "vstyle/pipeline.hpp"
#include "vstyle/run_config.hpp"
#include "vstyle/synthetic.hpp"

namespace {

namespace fs = std::filesystem;

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw vstyle::IoError("cannot create output directory: " + dir);
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw vstyle::IoError("cannot open for writing: " + path);
    os << text;
    os.flush();
    if (!os) throw vstyle::IoError("write failed: " + path);
}

vstyle::StylizeInputs load_inputs(const vstyle::RunConfig& cfg) {
    vstyle::StylizeInputs in;
    in.content = vstyle::load_grid(cfg.content_path);
    in.flows = vstyle::load_flows(cfg.flows_path);
    in.style = vstyle::load_grid(cfg.style_path);
    return in;
}

vstyle::ToyDenoiser make_denoiser(const vstyle::RunConfig& cfg) {
    vstyle::DenoiserParams dp;
    dp.channels = cfg.channels;
    dp.height = cfg.height;
    dp.width = cfg.width;
    dp.patch_y = cfg.patch_y;
    dp.patch_x = cfg.patch_x;
    dp.blocks = cfg.model_blocks;
    dp.d_model = cfg.d_model;
    dp.seed = cfg.model_seed;
    return vstyle::ToyDenoiser(dp);
}

void write_diagnostics(const vstyle::RunConfig& cfg, const vstyle::Grid4& content) {
    const vstyle::SampledSequence sampled =
        vstyle::sample_indices(cfg.frames, cfg.r, cfg.delta_p);
    const vstyle::Grid4 latents = vstyle::take_frames(content, sampled.indices);
    const vstyle::ToyDenoiser den = make_denoiser(cfg);
    const vstyle::AttentionDiagnostics diag =
        vstyle::diagnose_attention(den, latents, sampled.indices, cfg.diag_sigma, cfg.diag_query);

    std::ostringstream temporal;
    vstyle::write_temporal_csv(temporal, diag);
    write_text(join(cfg.output_dir, "attn_temporal.csv"), temporal.str());
    std::ostringstream spatial;
    vstyle::write_spatial_csv(spatial, diag);
    write_text(join(cfg.output_dir, "attn_spatial.csv"), spatial.str());
}

int run_gen_synthetic(const std::string& spec_path) {
    const vstyle::SyntheticJob job = vstyle::parse_synthetic_job_file(spec_path);
    const vstyle::SyntheticVideo video = vstyle::gen_synthetic(job.spec);
    vstyle::save_grid(video.content, job.content_path);
    vstyle::save_flows(video.flows, job.flows_path);
    vstyle::save_grid(video.style, job.style_path);
    std::cout << "wrote " << job.content_path << '\n'
              << "wrote " << job.flows_path << '\n'
              << "wrote " << job.style_path << '\n';
    return 0;
}

int run_invert(const std::string& config_path) {
    const vstyle::RunConfig cfg = vstyle::parse_run_config_file(config_path);
    const vstyle::Grid4 content = vstyle::load_grid(cfg.content_path);
    if (content.s != cfg.frames || content.c != cfg.channels || content.h != cfg.height ||
        content.w != cfg.width)
        throw vstyle::ShapeError("content dims do not match the configuration");
    const vstyle::SampledSequence sampled =
        vstyle::sample_indices(cfg.frames, cfg.r, cfg.delta_p);
    const vstyle::Grid4 x0 = vstyle::take_frames(content, sampled.indices);
    const vstyle::ToyDenoiser den = make_denoiser(cfg);
    const vstyle::GuidanceSchedule sched = vstyle::make_schedule(cfg.schedule);
    auto [x_T, traj] = vstyle::euler_invert(den, x0, sched.sigmas, cfg.inversion_iterations);

    ensure_dir(cfg.output_dir);
    vstyle::save_grid(x_T, join(cfg.output_dir, "inverted.fvg4"));
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        std::ostringstream name;
        name << "trajectory_" << std::setw(2) << std::setfill('0') << i << ".fvg4";
        vstyle::save_grid(traj.states[i], join(cfg.output_dir, name.str()));
    }
    std::cout << "wrote " << join(cfg.output_dir, "inverted.fvg4") << " and "
              << traj.states.size() << " trajectory grids\n";
    return 0;
}

int run_stylize_cmd(const std::string& config_path) {
    const vstyle::RunConfig cfg = vstyle::parse_run_config_file(config_path);
    const vstyle::StylizeInputs in = load_inputs(cfg);
    const vstyle::StylizeResult res = vstyle::run_stylize(cfg, in);

    ensure_dir(cfg.output_dir);
    vstyle::save_grid(res.stylized, join(cfg.output_dir, "stylized.fvg4"));
    vstyle::save_grid(res.reconstruction, join(cfg.output_dir, "recon.fvg4"));
    vstyle::save_grid(res.inverted, join(cfg.output_dir, "inverted.fvg4"));
    vstyle::save_mask(res.flow_mask_dilated, join(cfg.output_dir, "flow_mask.fvm6"));
    vstyle::save_mask(vstyle::reference_mask_entries(res.ref_masks, cfg.frames),
                      join(cfg.output_dir, "reference_mask.fvm6"));
    write_diagnostics(cfg, in.content);
    std::cout << "wrote stylized.fvg4, recon.fvg4, inverted.fvg4, flow_mask.fvm6, "
                 "reference_mask.fvm6, attn_temporal.csv, attn_spatial.csv in "
              << cfg.output_dir << '\n';
    return 0;
}

int run_masks(const std::string& config_path) {
    const vstyle::RunConfig cfg = vstyle::parse_run_config_file(config_path);
    const vstyle::FlowFieldSequence flows = vstyle::load_flows(cfg.flows_path);
    if (flows.frames != cfg.frames || flows.h != cfg.height || flows.w != cfg.width)
        throw vstyle::ShapeError("flow dims do not match the configuration");
    const vstyle::ReferenceSet refs =
        vstyle::arrange_references(cfg.frames, cfg.r, cfg.delta_p, cfg.policy);
    const vstyle::ReferenceMask ref_masks = vstyle::reference_masks(flows, refs.frames);
    const vstyle::CorrespondenceMask dilated =
        vstyle::dilate(vstyle::flow_mask(flows), cfg.dilation_radius);

    ensure_dir(cfg.output_dir);
    vstyle::save_mask(dilated, join(cfg.output_dir, "flow_mask.fvm6"));
    vstyle::save_mask(vstyle::reference_mask_entries(ref_masks, cfg.frames),
                      join(cfg.output_dir, "reference_mask.fvm6"));
    std::cout << "wrote flow_mask.fvm6 and reference_mask.fvm6 in " << cfg.output_dir << '\n';
    return 0;
}

int run_diagnose(const std::string& config_path) {
    const vstyle::RunConfig cfg = vstyle::parse_run_config_file(config_path);
    const vstyle::Grid4 content = vstyle::load_grid(cfg.content_path);
    if (content.s != cfg.frames || content.c != cfg.channels || content.h != cfg.height ||
        content.w != cfg.width)
        throw vstyle::ShapeError("content dims do not match the configuration");
    ensure_dir(cfg.output_dir);
    write_diagnostics(cfg, content);
    std::cout << "wrote attn_temporal.csv and attn_spatial.csv in " << cfg.output_dir << '\n';
    return 0;
}

int run_spectrum(const std::string& grid_path) {
    const vstyle::Grid4 g = vstyle::load_grid(grid_path);
    vstyle::write_spectrum_csv(std::cout, vstyle::spectrum_profile(g));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"training-free video stylization toolkit"};
    app.require_subcommand(1);

    std::string spec_path;
    std::string config_path;
    std::string grid_path;

    CLI::App* gen = app.add_subcommand("gen-synthetic",
                                       "write a synthetic content/flow/style triple");
    gen->add_option("spec", spec_path, "spec JSON path")->required();
    CLI::App* invert = app.add_subcommand("invert", "invert the sampled content latents");
    invert->add_option("config", config_path, "run config JSON path")->required();
    CLI::App* stylize = app.add_subcommand("stylize", "run the full guided stylization loop");
    stylize->add_option("config", config_path, "run config JSON path")->required();
    CLI::App* masks = app.add_subcommand("masks", "write flow and reference mask files");
    masks->add_option("config", config_path, "run config JSON path")->required();
    CLI::App* diag = app.add_subcommand("diagnose-attn", "write attention diagnostics CSVs");
    diag->add_option("config", config_path, "run config JSON path")->required();
    CLI::App* spectrum = app.add_subcommand("spectrum", "print the radial spectrum CSV");
    spectrum->add_option("grid", grid_path, "latent grid path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return run_gen_synthetic(spec_path);
        if (invert->parsed()) return run_invert(config_path);
        if (stylize->parsed()) return run_stylize_cmd(config_path);
        if (masks->parsed()) return run_masks(config_path);
        if (diag->parsed()) return run_diagnose(config_path);
        if (spectrum->parsed()) return run_spectrum(grid_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return vstyle::cli_exit_code(e);
    }
    return 0;
}
