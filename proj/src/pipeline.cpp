#include "moblur/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "moblur/blur_effects.hpp"
#include "moblur/color_transfer.hpp"
#include "moblur/hdr.hpp"
#include "moblur/image_io.hpp"
#include "moblur/layer_separation.hpp"
#include "moblur/parallel.hpp"
#include "moblur/tracking.hpp"

namespace moblur {

namespace fs = std::filesystem;

PipelineMode parse_mode(const std::string& name) {
    if (name == "panning") return PipelineMode::Panning;
    if (name == "cinemagraph") return PipelineMode::Cinemagraph;
    if (name == "blur") return PipelineMode::Blur;
    if (name == "hdr") return PipelineMode::Hdr;
    if (name == "separate") return PipelineMode::Separate;
    if (name == "flow") return PipelineMode::Flow;
    throw ConfigError("unknown mode '" + name +
                      "' (expected panning|cinemagraph|blur|hdr|separate|flow)");
}

std::string mode_name(PipelineMode mode) {
    switch (mode) {
        case PipelineMode::Panning: return "panning";
        case PipelineMode::Cinemagraph: return "cinemagraph";
        case PipelineMode::Blur: return "blur";
        case PipelineMode::Hdr: return "hdr";
        case PipelineMode::Separate: return "separate";
        case PipelineMode::Flow: return "flow";
    }
    return "?";
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "input",       "range",       "ref",          "mode",        "bbox",
        "blur_scale",  "tau",         "feather",      "fix_anchor",  "shared_color_map",
        "median_motion", "flow_levels", "flow_scale",  "flow_window", "flow_iterations",
        "flow_poly_n", "flow_poly_sigma", "ev_gap",    "evs",         "hdr_samples",
        "hdr_lambda",  "tonemap_key", "out",          "threads",     "debug"};
    return keys;
}

namespace {

int edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::vector<int>> d(a.size() + 1, std::vector<int>(b.size() + 1, 0));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<int>(i);
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                                d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    return d[a.size()][b.size()];
}

std::string nearest_key(const std::string& key) {
    int best = 1 << 30;
    std::string match;
    for (const std::string& k : config_keys()) {
        int dist = edit_distance(key, k);
        if (dist < best) {
            best = dist;
            match = k;
        }
    }
    return best <= 3 ? match : std::string();
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse number from '" + value + "'");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse integer from '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "off" || value == "no") return false;
    throw ConfigError("key '" + key + "': cannot parse boolean from '" + value + "'");
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string part;
    while (std::getline(ss, part, ',')) out.push_back(parse_double(key, trim(part)));
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
}

}  // namespace

void apply_config_value(PipelineConfig& config, const std::string& key,
                        const std::string& value) {
    if (key == "input") {
        config.input_pattern = value;
    } else if (key == "range") {
        std::size_t pos = value.find("..");
        if (pos == std::string::npos)
            throw ConfigError("key 'range': expected '<first>..<last>', got '" + value + "'");
        config.range_first = parse_int(key, trim(value.substr(0, pos)));
        config.range_last = parse_int(key, trim(value.substr(pos + 2)));
    } else if (key == "ref") {
        config.reference_path = value;
    } else if (key == "mode") {
        config.mode = parse_mode(value);
    } else if (key == "bbox") {
        std::vector<double> v = parse_double_list(key, value);
        if (v.size() != 4 || v[2] <= 0 || v[3] <= 0)
            throw ConfigError("key 'bbox': expected x,y,w,h with positive size");
        config.bbox = BoundingBox{v[0], v[1], v[2], v[3]};
    } else if (key == "blur_scale") {
        config.blur_scale = parse_double(key, value);
        if (config.blur_scale < 0) throw ConfigError("key 'blur_scale': must be >= 0");
    } else if (key == "tau") {
        config.tau = parse_double(key, value);
        if (config.tau <= 0) throw ConfigError("key 'tau': must be > 0");
    } else if (key == "feather") {
        config.feather = parse_int(key, value);
        if (config.feather < 0) throw ConfigError("key 'feather': must be >= 0");
    } else if (key == "fix_anchor") {
        config.fix_anchor = parse_bool(key, value);
    } else if (key == "shared_color_map") {
        config.shared_color_map = parse_bool(key, value);
    } else if (key == "median_motion") {
        config.median_motion = parse_bool(key, value);
    } else if (key == "flow_levels") {
        config.flow.pyramid_levels = parse_int(key, value);
    } else if (key == "flow_scale") {
        config.flow.pyramid_scale = parse_double(key, value);
    } else if (key == "flow_window") {
        config.flow.window = parse_int(key, value);
    } else if (key == "flow_iterations") {
        config.flow.iterations = parse_int(key, value);
    } else if (key == "flow_poly_n") {
        config.flow.poly_n = parse_int(key, value);
    } else if (key == "flow_poly_sigma") {
        config.flow.poly_sigma = parse_double(key, value);
    } else if (key == "ev_gap") {
        config.ev_gap = parse_double(key, value);
    } else if (key == "evs") {
        config.evs = parse_double_list(key, value);
    } else if (key == "hdr_samples") {
        config.hdr_samples = parse_int(key, value);
    } else if (key == "hdr_lambda") {
        config.hdr_lambda = parse_double(key, value);
    } else if (key == "tonemap_key") {
        config.tonemap_key = parse_double(key, value);
        if (config.tonemap_key <= 0) throw ConfigError("key 'tonemap_key': must be > 0");
    } else if (key == "out") {
        config.output_dir = value;
    } else if (key == "threads") {
        config.threads = parse_int(key, value);
    } else if (key == "debug") {
        config.debug = parse_bool(key, value);
    } else {
        std::string msg = "unknown config key '" + key + "'";
        std::string hint = nearest_key(key);
        if (!hint.empty()) msg += ", did you mean '" + hint + "'?";
        msg += " (valid keys:";
        for (const std::string& k : config_keys()) msg += " " + k;
        msg += ")";
        throw ConfigError(msg);
    }
}

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig config;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value', got '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        try {
            apply_config_value(config, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return config;
}

namespace {

class WarningSink {
public:
    void add(const std::string& msg) {
        if (seen_.insert(msg).second) warnings_.push_back(msg);
    }
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    std::set<std::string> seen_;
    std::vector<std::string> warnings_;
};

struct StageGuard {
    // Rethrows contract/numerical errors with the stage name attached.
    template <typename Fn>
    static auto run(const std::string& stage, Fn&& fn) {
        try {
            return fn();
        } catch (const ConfigError&) {
            throw;
        } catch (const IoError&) {
            throw;
        } catch (const InsufficientDataError& e) {
            throw InsufficientDataError("[" + stage + "] " + e.what());
        } catch (const NumericalError& e) {
            throw NumericalError("[" + stage + "] " + e.what());
        } catch (const ContractError& e) {
            throw ContractError("[" + stage + "] " + e.what());
        }
    }
};

std::string output_frame_path(const PipelineConfig& config, int index,
                              const std::string& prefix, const std::string& ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%06d.%s", prefix.c_str(), index, ext.c_str());
    return (fs::path(config.output_dir) / buf).string();
}

void validate_pipeline_config(const PipelineConfig& config) {
    if (config.input_pattern.empty()) throw ConfigError("missing input pattern");
    if (!config.mode) throw ConfigError("missing mode");
    if (config.range_last < config.range_first)
        throw ConfigError("empty frame range " + std::to_string(config.range_first) + ".." +
                          std::to_string(config.range_last));
    config.flow.validate();
    PipelineMode mode = *config.mode;
    bool needs_track = mode == PipelineMode::Panning || mode == PipelineMode::Cinemagraph ||
                       mode == PipelineMode::Blur;
    if (needs_track && !config.bbox)
        throw ConfigError("mode '" + mode_name(mode) + "' requires a bounding box (bbox)");
    if (config.bbox && (config.bbox->w <= 0 || config.bbox->h <= 0))
        throw ConfigError("bounding box must have positive size");
    if (mode == PipelineMode::Hdr && config.evs.empty() && config.reference_path.empty())
        throw ConfigError("mode 'hdr' requires either evs (bracketed stack) or ref");
    if (!config.evs.empty())
        for (std::size_t j = 1; j < config.evs.size(); ++j)
            if (config.evs[j] <= config.evs[j - 1])
                throw ConfigError("evs must strictly increase");
}

std::vector<Image> load_frames(const PipelineConfig& config) {
    std::vector<std::string> paths =
        expand_frame_pattern(config.input_pattern, config.range_first, config.range_last);
    std::vector<Image> frames(paths.size());
    parallel_for(static_cast<int>(paths.size()), config.threads, [&](int i) {
        frames[static_cast<std::size_t>(i)] = read_image_png(paths[static_cast<std::size_t>(i)]);
    });
    for (std::size_t i = 1; i < frames.size(); ++i)
        if (!frames[i].same_size(frames[0]))
            throw ContractError("frame " + paths[i] + " dimensions differ from " + paths[0]);
    return frames;
}

void write_track_dump(const std::string& path, const TrackResult& track) {
    std::ofstream file(path);
    if (!file) throw IoError("cannot open file for writing: " + path);
    file << "# frame box_x box_y box_w box_h\n";
    for (std::size_t t = 0; t < track.boxes.size(); ++t) {
        const BoundingBox& b = track.boxes[t];
        file << t << " " << b.x << " " << b.y << " " << b.w << " " << b.h << "\n";
    }
    file << "# pair motion_dx motion_dy\n";
    for (std::size_t t = 0; t < track.motions.size(); ++t)
        file << t << " " << track.motions[t].x << " " << track.motions[t].y << "\n";
}

void write_kernel_dump(const std::string& path, const Kernel& kernel) {
    std::ofstream file(path);
    if (!file) throw IoError("cannot open file for writing: " + path);
    file << kernel.width << " " << kernel.height << "\n";
    for (int y = 0; y < kernel.height; ++y) {
        for (int x = 0; x < kernel.width; ++x)
            file << kernel.at(x, y) << (x + 1 == kernel.width ? "" : " ");
        file << "\n";
    }
}

}  // namespace

PipelineReport run_pipeline(const PipelineConfig& config) {
    validate_pipeline_config(config);
    PipelineMode mode = *config.mode;
    PipelineReport report;
    WarningSink warnings;

    fs::create_directories(config.output_dir);
    fs::path debug_dir = fs::path(config.output_dir) / "debug";
    if (config.debug) fs::create_directories(debug_dir);

    // Stage: load.
    std::vector<Image> raw_frames = StageGuard::run("load", [&] { return load_frames(config); });
    Image reference;
    if (!config.reference_path.empty())
        reference = StageGuard::run("load", [&] { return read_image_png(config.reference_path); });

    // Stage: color transfer.
    std::vector<Image> frames = raw_frames;
    if (config.reference_path.empty()) {
        if (mode != PipelineMode::Hdr || config.evs.empty())
            warnings.add("no reference image given; skipping color compensation");
    } else {
        StageGuard::run("color-transfer", [&] {
            ChannelStats ref_stats = channel_stats(reference);
            if (config.shared_color_map) {
                AffineColorMap map = mk_transform(channel_stats(raw_frames[0]), ref_stats);
                parallel_for(static_cast<int>(frames.size()), config.threads, [&](int i) {
                    auto t = static_cast<std::size_t>(i);
                    frames[t] = apply_color_map(raw_frames[t], map);
                });
            } else {
                parallel_for(static_cast<int>(frames.size()), config.threads, [&](int i) {
                    auto t = static_cast<std::size_t>(i);
                    AffineColorMap map = mk_transform(channel_stats(raw_frames[t]), ref_stats);
                    frames[t] = apply_color_map(raw_frames[t], map);
                });
            }
            return 0;
        });
        if (config.debug) {
            for (std::size_t t = 0; t < frames.size(); ++t)
                write_image_png((debug_dir / ("compensated_" + std::to_string(t) + ".png")).string(),
                                frames[t]);
        }
    }

    // Bracketed-stack HDR does not run the remaining stages.
    if (mode == PipelineMode::Hdr && !config.evs.empty()) {
        if (config.evs.size() != frames.size())
            throw ConfigError("evs count (" + std::to_string(config.evs.size()) +
                              ") does not match frame count (" + std::to_string(frames.size()) +
                              ")");
        if (!config.reference_path.empty())
            warnings.add("evs given: treating input frames as a bracketed stack of the raw "
                         "frames; the reference is not used");
        ExposureStack stack{raw_frames, config.evs};
        RadianceMap radiance = StageGuard::run("hdr", [&] {
            ResponseCurve response =
                recover_response(stack, config.hdr_samples, config.hdr_lambda);
            return merge_radiance(stack, response);
        });
        std::string pfm_path = (fs::path(config.output_dir) / "hdr.pfm").string();
        write_pfm(pfm_path, radiance);
        Image preview =
            tone_map(radiance, config.tonemap_key, default_white(radiance, config.tonemap_key));
        write_image_png((fs::path(config.output_dir) / "hdr.png").string(), preview);
        report.frames_written = 2;
        report.warnings = warnings.warnings();
        return report;
    }

    // Stage: optical flow outputs.
    if (mode == PipelineMode::Flow) {
        if (frames.size() < 2) throw ConfigError("mode 'flow' needs at least 2 frames");
        std::vector<FlowField> flows(frames.size() - 1);
        StageGuard::run("flow", [&] {
            parallel_for(static_cast<int>(flows.size()), config.threads, [&](int i) {
                auto t = static_cast<std::size_t>(i);
                flows[t] = farneback_flow(frames[t], frames[t + 1], config.flow);
            });
            return 0;
        });
        for (std::size_t t = 0; t < flows.size(); ++t) {
            write_image_png(output_frame_path(config, config.range_first + static_cast<int>(t),
                                              "out", "png"),
                            flow_to_image(flows[t]));
            ++report.frames_written;
        }
        report.warnings = warnings.warnings();
        return report;
    }

    // Per-frame pair HDR (raw + compensated as a two-exposure stack).
    if (mode == PipelineMode::Hdr) {
        std::vector<std::string> stack_warnings;
        ResponseCurve response = StageGuard::run("hdr", [&] {
            ExposureStack stack0 = build_stack_from_compensation(raw_frames[0], frames[0],
                                                                 config.ev_gap, &stack_warnings);
            return recover_response(stack0, config.hdr_samples, config.hdr_lambda);
        });
        std::vector<RadianceMap> radiance(frames.size());
        StageGuard::run("hdr", [&] {
            parallel_for(static_cast<int>(frames.size()), config.threads, [&](int i) {
                auto t = static_cast<std::size_t>(i);
                std::vector<std::string> local;
                ExposureStack stack = build_stack_from_compensation(raw_frames[t], frames[t],
                                                                    config.ev_gap, &local);
                radiance[t] = merge_radiance(stack, response);
            });
            return 0;
        });
        for (const std::string& w : stack_warnings) warnings.add(w);
        for (std::size_t t = 0; t < radiance.size(); ++t) {
            int index = config.range_first + static_cast<int>(t);
            write_pfm(output_frame_path(config, index, "out", "pfm"), radiance[t]);
            Image preview = tone_map(radiance[t], config.tonemap_key,
                                     default_white(radiance[t], config.tonemap_key));
            write_image_png(output_frame_path(config, index, "out", "png"), preview);
            report.frames_written += 2;
        }
        report.warnings = warnings.warnings();
        return report;
    }

    // Stage: layer separation.
    if (frames.size() < 2)
        throw ConfigError("mode '" + mode_name(mode) + "' needs at least 2 frames");
    LowRankResult layers = StageGuard::run("layer-separation", [&] {
        return rank1_background(stack_frames(frames));
    });
    std::vector<Mask> masks(frames.size());
    StageGuard::run("layer-separation", [&] {
        parallel_for(static_cast<int>(frames.size()), config.threads, [&](int i) {
            auto t = static_cast<std::size_t>(i);
            masks[t] = extract_mask(frames[t], layers.background[t], config.tau, config.feather);
        });
        return 0;
    });
    if (config.debug) {
        for (std::size_t t = 0; t < frames.size(); ++t) {
            write_image_png((debug_dir / ("background_" + std::to_string(t) + ".png")).string(),
                            layers.background[t]);
            write_plane_png((debug_dir / ("mask_" + std::to_string(t) + ".png")).string(),
                            masks[t]);
        }
    }

    if (mode == PipelineMode::Separate) {
        for (std::size_t t = 0; t < frames.size(); ++t) {
            int index = config.range_first + static_cast<int>(t);
            write_image_png(output_frame_path(config, index, "out", "png"),
                            layers.background[t]);
            write_plane_png(output_frame_path(config, index, "mask", "png"), masks[t]);
            report.frames_written += 2;
        }
        report.warnings = warnings.warnings();
        return report;
    }

    // Stage: tracking.
    TrackResult track = StageGuard::run("tracking", [&] {
        return track_sequence(frames, *config.bbox, config.flow, config.median_motion,
                              config.threads);
    });
    if (config.debug) write_track_dump((debug_dir / "track.txt").string(), track);

    // Stage: effect rendering.
    EffectConfig effect;
    effect.mode = mode == PipelineMode::Panning     ? EffectMode::PanningShot
                  : mode == PipelineMode::Cinemagraph ? EffectMode::Cinemagraph
                                                      : EffectMode::GlobalBlur;
    effect.blur_scale = config.blur_scale;
    effect.tau = config.tau;
    effect.feather = config.feather;
    effect.fix_anchor = config.fix_anchor;
    std::vector<Image> rendered = StageGuard::run("render", [&] {
        return render_effect(frames, masks, layers.background, track, effect, config.threads);
    });
    if (config.debug) {
        for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
            Vec2 m = track.motions[t];
            write_kernel_dump((debug_dir / ("kernel_" + std::to_string(t) + ".txt")).string(),
                              motion_blur_kernel({-m.x, -m.y}, config.blur_scale));
        }
    }
    for (std::size_t t = 0; t < rendered.size(); ++t) {
        int index = config.range_first + static_cast<int>(t);
        write_image_png(output_frame_path(config, index, "out", "png"), rendered[t]);
        ++report.frames_written;
    }
    report.warnings = warnings.warnings();
    return report;
}

}  // namespace moblur
