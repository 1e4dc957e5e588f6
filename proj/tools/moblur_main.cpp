#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "moblur/pipeline.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string input;
    std::string range;
    std::string ref;
    std::string bbox;
    std::string evs;
    std::string out;
    double blur_scale = 1.0;
    double tau = 0.08;
    int feather = 2;
    double ev_gap = 0.0;
    int threads = 0;
    bool fix_anchor = false;
    bool shared_color_map = false;
    bool median_motion = false;
    bool debug = false;
    int flow_levels = 3;
    double flow_scale = 0.5;
    int flow_window = 15;
    int flow_iterations = 3;
    int flow_poly_n = 7;
    double flow_poly_sigma = 1.5;
    int hdr_samples = 200;
    double hdr_lambda = 50.0;
    double tonemap_key = 0.18;
};

void add_common_options(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config_path, "config file (key = value lines)");
    cmd->add_option("--input", opt.input, "frame path pattern, e.g. frames/f_%06d.png");
    cmd->add_option("--range", opt.range, "frame index range, e.g. 0..9");
    cmd->add_option("--ref", opt.ref, "well-exposed reference photo for color compensation");
    cmd->add_option("--bbox", opt.bbox, "first-frame target box as x,y,w,h");
    cmd->add_option("--blur-scale", opt.blur_scale, "multiplier on the motion magnitude")
        ->capture_default_str();
    cmd->add_option("--tau", opt.tau, "mask luminance threshold")->capture_default_str();
    cmd->add_option("--feather", opt.feather, "mask feather radius in px")
        ->capture_default_str();
    cmd->add_option("--out", opt.out, "output directory (default: out)");
    cmd->add_option("--threads", opt.threads, "worker threads, 0 = hardware")
        ->capture_default_str();
    cmd->add_flag("--fix-anchor", opt.fix_anchor, "keep the tracked box center fixed");
    cmd->add_flag("--shared-color-map", opt.shared_color_map,
                  "compute one color map from frame 0 instead of per frame");
    cmd->add_flag("--median-motion", opt.median_motion,
                  "track with the median instead of the mean flow");
    cmd->add_flag("--debug", opt.debug, "write intermediate layers under <out>/debug");
    cmd->add_option("--flow-levels", opt.flow_levels, "flow pyramid levels")
        ->capture_default_str();
    cmd->add_option("--flow-scale", opt.flow_scale, "flow pyramid scale in (0,1)")
        ->capture_default_str();
    cmd->add_option("--flow-window", opt.flow_window, "flow pooling window (odd)")
        ->capture_default_str();
    cmd->add_option("--flow-iterations", opt.flow_iterations, "flow refinement passes")
        ->capture_default_str();
    cmd->add_option("--flow-poly-n", opt.flow_poly_n, "polynomial expansion window (odd >= 5)")
        ->capture_default_str();
    cmd->add_option("--flow-poly-sigma", opt.flow_poly_sigma,
                    "polynomial expansion Gaussian sigma")
        ->capture_default_str();
    cmd->add_option("--evs", opt.evs,
                    "treat the input frames as one bracketed stack with these EVs, e.g. -2,0,2");
    cmd->add_option("--ev-gap", opt.ev_gap,
                    "stops between raw and compensated (0 = estimate from luminance)")
        ->capture_default_str();
    cmd->add_option("--hdr-samples", opt.hdr_samples, "response recovery sample sites")
        ->capture_default_str();
    cmd->add_option("--hdr-lambda", opt.hdr_lambda, "response smoothness weight")
        ->capture_default_str();
    cmd->add_option("--tonemap-key", opt.tonemap_key, "Reinhard key value")
        ->capture_default_str();
}

// Flags override config-file values which override defaults.
moblur::PipelineConfig build_config(const CLI::App* cmd, const CliOptions& opt,
                                    const std::string& mode) {
    moblur::PipelineConfig config;
    if (!opt.config_path.empty()) {
        std::ifstream file(opt.config_path);
        if (!file) throw moblur::IoError("cannot open config file: " + opt.config_path);
        std::stringstream ss;
        ss << file.rdbuf();
        config = moblur::parse_config(ss.str());
    }
    config.mode = moblur::parse_mode(mode);

    auto set = [&](const std::string& flag, const std::string& key, const std::string& value) {
        if (cmd->count(flag) > 0) moblur::apply_config_value(config, key, value);
    };
    set("--input", "input", opt.input);
    set("--range", "range", opt.range);
    set("--ref", "ref", opt.ref);
    set("--bbox", "bbox", opt.bbox);
    set("--blur-scale", "blur_scale", std::to_string(opt.blur_scale));
    set("--tau", "tau", std::to_string(opt.tau));
    set("--feather", "feather", std::to_string(opt.feather));
    set("--out", "out", opt.out);
    set("--threads", "threads", std::to_string(opt.threads));
    set("--flow-levels", "flow_levels", std::to_string(opt.flow_levels));
    set("--flow-scale", "flow_scale", std::to_string(opt.flow_scale));
    set("--flow-window", "flow_window", std::to_string(opt.flow_window));
    set("--flow-iterations", "flow_iterations", std::to_string(opt.flow_iterations));
    set("--flow-poly-n", "flow_poly_n", std::to_string(opt.flow_poly_n));
    set("--flow-poly-sigma", "flow_poly_sigma", std::to_string(opt.flow_poly_sigma));
    set("--evs", "evs", opt.evs);
    set("--hdr-samples", "hdr_samples", std::to_string(opt.hdr_samples));
    set("--hdr-lambda", "hdr_lambda", std::to_string(opt.hdr_lambda));
    set("--tonemap-key", "tonemap_key", std::to_string(opt.tonemap_key));
    if (cmd->count("--ev-gap") > 0 && opt.ev_gap != 0.0)
        moblur::apply_config_value(config, "ev_gap", std::to_string(opt.ev_gap));
    if (cmd->count("--fix-anchor") > 0) config.fix_anchor = opt.fix_anchor;
    if (cmd->count("--shared-color-map") > 0) config.shared_color_map = opt.shared_color_map;
    if (cmd->count("--median-motion") > 0) config.median_motion = opt.median_motion;
    if (cmd->count("--debug") > 0) config.debug = opt.debug;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "moblur: per-object motion blur, panning shots, cinemagraphs and HDR frames\n"
        "from fast-shutter frame sequences plus one well-exposed reference photo"};
    app.require_subcommand(1);

    CliOptions opt;
    const char* modes[] = {"panning", "cinemagraph", "blur", "hdr", "separate", "flow"};
    const char* descriptions[] = {
        "sharp tracked object over a motion-blurred background",
        "live object over a frozen, motion-blurred background",
        "whole-frame directional blur from the tracked motion",
        "merge a multi-exposure stack (or raw/compensated pairs) into radiance maps",
        "write the separated background layer and foreground masks",
        "write HSV visualizations of the dense optical flow",
    };
    for (int i = 0; i < 6; ++i) add_common_options(app.add_subcommand(modes[i], descriptions[i]), opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        CLI::App* cmd = app.get_subcommands().front();
        moblur::PipelineConfig config = build_config(cmd, opt, cmd->get_name());
        moblur::PipelineReport report = moblur::run_pipeline(config);
        for (const std::string& w : report.warnings)
            std::cerr << "warning: " << w << "\n";
        std::cout << "wrote " << report.frames_written << " file(s) to " << config.output_dir
                  << "\n";
        return 0;
    } catch (const moblur::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const moblur::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 3;
    } catch (const moblur::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const moblur::ContractError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
