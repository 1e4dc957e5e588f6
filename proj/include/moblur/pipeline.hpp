#pragma once

#include <optional>
#include <string>
#include <vector>

#include "moblur/image.hpp"
#include "moblur/optical_flow.hpp"

namespace moblur {

enum class PipelineMode { Panning, Cinemagraph, Blur, Hdr, Separate, Flow };

PipelineMode parse_mode(const std::string& name);
std::string mode_name(PipelineMode mode);

struct PipelineConfig {
    std::string input_pattern;
    int range_first = 0;
    int range_last = -1;
    std::string reference_path;  // empty = no color compensation
    std::optional<PipelineMode> mode;
    std::optional<BoundingBox> bbox;
    double blur_scale = 1.0;
    double tau = 0.08;
    int feather = 2;
    bool fix_anchor = false;
    bool shared_color_map = false;  // one map from frame 0 instead of per-frame
    bool median_motion = false;
    FlowParams flow;
    std::optional<double> ev_gap;   // stops; estimated from luminance when unset
    std::vector<double> evs;        // treat the input frames as one bracketed stack
    int hdr_samples = 200;
    double hdr_lambda = 50.0;
    double tonemap_key = 0.18;
    std::string output_dir = "out";
    int threads = 0;  // 0 = hardware parallelism
    bool debug = false;
};

struct PipelineReport {
    int frames_written = 0;
    std::vector<std::string> warnings;
};

// Known config keys, the same names the config file uses.
const std::vector<std::string>& config_keys();

// Applies one key/value pair; throws ConfigError for unknown keys (with a
// nearest-match suggestion) or unparseable values.
void apply_config_value(PipelineConfig& config, const std::string& key,
                        const std::string& value);

// Line-oriented "key = value" document; '#' starts a comment.
PipelineConfig parse_config(const std::string& text);

// Runs the full pipeline for the configured mode and writes outputs under
// config.output_dir. Deterministic for identical inputs and config.
PipelineReport run_pipeline(const PipelineConfig& config);

}  // namespace moblur
