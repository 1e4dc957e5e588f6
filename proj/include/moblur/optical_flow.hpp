#pragma once

#include <vector>

#include "moblur/image.hpp"
#include "moblur/synth.hpp"

namespace moblur {

// Dense displacement field between two frames. Pixel p in the first frame
// corresponds to p + flow(p) in the second; x grows right, y grows down.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<double> dx;
    std::vector<double> dy;

    FlowField() = default;
    FlowField(int w, int h)
        : width(w),
          height(h),
          dx(static_cast<std::size_t>(w) * h, 0.0),
          dy(static_cast<std::size_t>(w) * h, 0.0) {}

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

struct FlowParams {
    int pyramid_levels = 3;
    double pyramid_scale = 0.5;
    int window = 15;
    int iterations = 3;
    int poly_n = 7;
    double poly_sigma = 1.5;

    void validate() const;
};

// Per-pixel quadratic fit f(p + d) ~ d^T A d + b^T d + c with Gaussian
// applicability of width poly_n, computed by separable correlations.
struct PolyExpansion {
    int width = 0;
    int height = 0;
    Plane a11, a12, a22;  // symmetric quadratic part
    Plane bx, by;         // linear part
    Plane c;              // constant part
};

PolyExpansion poly_expansion(const Plane& img, int poly_n, double poly_sigma);

// Coarse-to-fine dense flow; color inputs are reduced to luminance.
FlowField farneback_flow(const Plane& prev, const Plane& next, const FlowParams& params = {});
FlowField farneback_flow(const Image& prev, const Image& next, const FlowParams& params = {});

// Average displacement over a region.
Vec2 mean_flow(const FlowField& flow, const BoundingBox& region);
Vec2 mean_flow(const FlowField& flow, const Mask& region);  // mask-weighted

// Median displacement per component, for outlier-robust tracking.
Vec2 median_flow(const FlowField& flow, const BoundingBox& region);

// HSV flow rendering: angle to hue, magnitude to saturation.
Image flow_to_image(const FlowField& flow);

}  // namespace moblur
