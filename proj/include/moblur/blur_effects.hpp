#pragma once

#include <vector>

#include "moblur/image.hpp"
#include "moblur/synth.hpp"
#include "moblur/tracking.hpp"

namespace moblur {

enum class EffectMode { PanningShot, Cinemagraph, GlobalBlur };

struct EffectConfig {
    EffectMode mode = EffectMode::PanningShot;
    double blur_scale = 1.0;  // multiplier on the motion magnitude
    double tau = 0.08;        // mask threshold used upstream, carried for reference
    int feather = 2;          // mask feather radius used upstream
    bool fix_anchor = false;  // re-center output on the frame-0 box center
};

struct CompositeParams {
    double sigma = 1.0;  // intensity balance applied to the background term
};

// Anti-aliased line segment through the kernel center, normalized to sum 1.
// Lengths below one pixel collapse to the 1x1 identity.
Kernel line_kernel(double length, double angle);

// Blur geometry derived from a motion vector.
double motion_blur_length(Vec2 motion, double blur_scale);
Kernel motion_blur_kernel(Vec2 motion, double blur_scale);

// sigma = mean frame luminance over the background region (mask < 0.5)
// divided by the background layer's mean over the same region, in [0.5, 2].
CompositeParams compute_sigma(const Image& frame, const Image& background, const Mask& mask);

// out = (1 - M) * sigma * background_layer + M * effect_layer, per pixel.
Image composite(const Image& effect_layer, const Image& background_layer, const Mask& mask,
                const CompositeParams& params);

// Full effect rendering over a clip; masks and backgrounds come from layer
// separation, the track from bounding-box propagation.
std::vector<Image> render_effect(const std::vector<Image>& frames,
                                 const std::vector<Mask>& masks,
                                 const std::vector<Image>& backgrounds,
                                 const TrackResult& track, const EffectConfig& cfg,
                                 int threads = 1);

}  // namespace moblur
