#include "moblur/blur_effects.hpp"

#include <algorithm>
#include <cmath>

#include "moblur/parallel.hpp"
#include "moblur/synth.hpp"

namespace moblur {

Kernel line_kernel(double length, double angle) {
    require(std::isfinite(length) && std::isfinite(angle), "line_kernel: non-finite input");
    require(length >= 0, "line_kernel: length must be non-negative");
    if (length < 1.0) return Kernel::identity();

    const int samples = static_cast<int>(std::ceil(length));
    const double cx = std::cos(angle);
    const double cy = std::sin(angle);

    double max_x = 0.0, max_y = 0.0;
    std::vector<Vec2> points(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) {
        double t = ((i + 0.5) / samples - 0.5) * length;
        points[static_cast<std::size_t>(i)] = {t * cx, t * cy};
        max_x = std::max(max_x, std::abs(t * cx));
        max_y = std::max(max_y, std::abs(t * cy));
    }
    const int half_x = static_cast<int>(std::ceil(max_x - 1e-9));
    const int half_y = static_cast<int>(std::ceil(max_y - 1e-9));

    Kernel k;
    k.width = 2 * half_x + 1;
    k.height = 2 * half_y + 1;
    k.weights.assign(static_cast<std::size_t>(k.width) * k.height, 0.0);

    auto splat = [&](int x, int y, double w) {
        if (x < -half_x || x > half_x || y < -half_y || y > half_y) return;
        k.weights[static_cast<std::size_t>(y + half_y) * k.width + (x + half_x)] += w;
    };
    const double w0 = 1.0 / samples;
    for (const Vec2& p : points) {
        double fx = std::floor(p.x);
        double fy = std::floor(p.y);
        int x0 = static_cast<int>(fx);
        int y0 = static_cast<int>(fy);
        double ax = p.x - fx;
        double ay = p.y - fy;
        splat(x0, y0, w0 * (1 - ax) * (1 - ay));
        splat(x0 + 1, y0, w0 * ax * (1 - ay));
        splat(x0, y0 + 1, w0 * (1 - ax) * ay);
        splat(x0 + 1, y0 + 1, w0 * ax * ay);
    }

    double sum = 0.0;
    for (double w : k.weights) sum += w;
    for (double& w : k.weights) w /= sum;
    return k;
}

double motion_blur_length(Vec2 motion, double blur_scale) {
    require(blur_scale >= 0, "motion_blur_length: blur_scale must be non-negative");
    return blur_scale * std::hypot(motion.x, motion.y);
}

Kernel motion_blur_kernel(Vec2 motion, double blur_scale) {
    double length = motion_blur_length(motion, blur_scale);
    double angle = std::atan2(motion.y, motion.x);
    return line_kernel(length, angle);
}

CompositeParams compute_sigma(const Image& frame, const Image& background, const Mask& mask) {
    require(frame.same_size(background), "compute_sigma: dimensions differ");
    require(mask.width == frame.width && mask.height == frame.height,
            "compute_sigma: mask dimensions differ");

    Plane lum_frame = luminance(frame);
    Plane lum_bg = luminance(background);
    double sum_frame = 0.0, sum_bg = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < mask.data.size(); ++i) {
        if (mask.data[i] >= 0.5) continue;
        sum_frame += lum_frame.data[i];
        sum_bg += lum_bg.data[i];
        ++count;
    }
    if (count == 0) throw ContractError("compute_sigma: background region is empty");

    CompositeParams params;
    params.sigma = sum_bg <= 1e-12 ? 1.0 : std::clamp(sum_frame / sum_bg, 0.5, 2.0);
    return params;
}

Image composite(const Image& effect_layer, const Image& background_layer, const Mask& mask,
                const CompositeParams& params) {
    require(effect_layer.same_size(background_layer), "composite: dimensions differ");
    require(mask.width == effect_layer.width && mask.height == effect_layer.height,
            "composite: mask dimensions differ");
    require(std::isfinite(params.sigma) && params.sigma > 0,
            "composite: sigma must be finite and positive");

    Image out(effect_layer.width, effect_layer.height);
    for (std::size_t i = 0; i < mask.data.size(); ++i) {
        double m = mask.data[i];
        double bg_w = (1.0 - m) * params.sigma;
        for (int c = 0; c < 3; ++c) {
            std::size_t j = i * 3 + static_cast<std::size_t>(c);
            out.data[j] = bg_w * background_layer.data[j] + m * effect_layer.data[j];
        }
    }
    return out;
}

namespace {

Vec2 motion_for_frame(const TrackResult& track, std::size_t t) {
    if (track.motions.empty()) return {0.0, 0.0};
    return track.motions[std::min(t, track.motions.size() - 1)];
}

}  // namespace

std::vector<Image> render_effect(const std::vector<Image>& frames,
                                 const std::vector<Mask>& masks,
                                 const std::vector<Image>& backgrounds,
                                 const TrackResult& track, const EffectConfig& cfg,
                                 int threads) {
    require(!frames.empty(), "render_effect: no frames");
    require(track.motions.size() + 1 == frames.size(),
            "render_effect: track length does not match frame count");
    const bool needs_layers = cfg.mode != EffectMode::GlobalBlur;
    if (needs_layers) {
        require(masks.size() == frames.size() && backgrounds.size() == frames.size(),
                "render_effect: masks/backgrounds length does not match frame count");
        require(track.boxes.size() == frames.size(),
                "render_effect: box count does not match frame count");
    }

    std::vector<Image> out(frames.size());

    if (cfg.mode == EffectMode::GlobalBlur) {
        parallel_for(static_cast<int>(frames.size()), threads, [&](int ti) {
            auto t = static_cast<std::size_t>(ti);
            Vec2 m = motion_for_frame(track, t);
            Kernel k = motion_blur_kernel({-m.x, -m.y}, cfg.blur_scale);
            out[t] = convolve2d(frames[t], k, BorderPolicy::Replicate);
        });
        return out;
    }

    if (cfg.mode == EffectMode::Cinemagraph) {
        // Freeze the background to its temporal reconstruction, blurred once by
        // the clip's average motion; only the masked object stays live. sigma
        // is fixed from frame 0 so the still surroundings do not flicker.
        Image frozen = accumulate_frames(backgrounds);
        Vec2 mean_motion{0.0, 0.0};
        for (const Vec2& m : track.motions) {
            mean_motion.x += m.x;
            mean_motion.y += m.y;
        }
        if (!track.motions.empty()) {
            mean_motion.x /= static_cast<double>(track.motions.size());
            mean_motion.y /= static_cast<double>(track.motions.size());
        }
        Kernel k = motion_blur_kernel({-mean_motion.x, -mean_motion.y}, cfg.blur_scale);
        Image frozen_blurred = convolve2d(frozen, k, BorderPolicy::Replicate);
        CompositeParams sigma = compute_sigma(frames[0], frozen, masks[0]);

        parallel_for(static_cast<int>(frames.size()), threads, [&](int ti) {
            auto t = static_cast<std::size_t>(ti);
            out[t] = composite(frames[t], frozen_blurred, masks[t], sigma);
        });
        return out;
    }

    // Panning shot: blur each background layer by the inverse foreground
    // motion, keep the foreground from the live frame.
    parallel_for(static_cast<int>(frames.size()), threads, [&](int ti) {
        auto t = static_cast<std::size_t>(ti);
        Vec2 m = motion_for_frame(track, t);
        Kernel k = motion_blur_kernel({-m.x, -m.y}, cfg.blur_scale);
        Image blurred = convolve2d(backgrounds[t], k, BorderPolicy::Replicate);
        CompositeParams sigma = compute_sigma(frames[t], backgrounds[t], masks[t]);
        Image composed = composite(frames[t], blurred, masks[t], sigma);
        if (cfg.fix_anchor) {
            Vec2 c0 = track.boxes.front().center();
            Vec2 ct = track.boxes[t].center();
            composed = translate_bilinear(composed, c0.x - ct.x, c0.y - ct.y,
                                          BorderPolicy::Replicate);
        }
        out[t] = composed;
    });
    return out;
}

}  // namespace moblur
