#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "moblur/image.hpp"

namespace moblur {

// Registered LDR images of one scene with relative exposure values in stops.
// Effective exposure time of entry j is 2^evs[j].
struct ExposureStack {
    std::vector<Image> images;
    std::vector<double> evs;
};

// Per-channel log-exposure lookup: code z in [0, 255] -> g(z) = ln E + ln dt.
// Monotone non-decreasing with g(128) = 0.
struct ResponseCurve {
    std::array<std::array<double, 256>, 3> log_exposure{};
};

// Relative radiance per pixel; values may exceed 1.
using RadianceMap = Image;

// Rejects dimension or ordering violations.
void validate_stack(const ExposureStack& stack);

// Treats a short-exposure frame and its color-compensated version as a
// two-image exposure stack. The gap is estimated from the luminance ratio
// when not supplied.
ExposureStack build_stack_from_compensation(const Image& raw, const Image& compensated,
                                            std::optional<double> ev_gap = std::nullopt,
                                            std::vector<std::string>* warnings = nullptr);

// Quantizes linear values to byte codes for response recovery and merging.
int pixel_code(double value);

// Triangular weighting, zero at both code extremes.
double hat_weight(int code);

// Least-squares response recovery over a deterministic spatial sample grid,
// with second-difference smoothing and an isotonic projection pass.
ResponseCurve recover_response(const ExposureStack& stack, int n_samples = 200,
                               double lambda = 50.0);

// The response of an ideal linear sensor, pivoted at code 128.
ResponseCurve linear_response();

// Weighted log-radiance average across the stack; pixels with no usable
// weight fall back to the middle exposure.
RadianceMap merge_radiance(const ExposureStack& stack, const ResponseCurve& response);

// Reinhard global operator with white-point roll-off; chroma preserved by
// per-pixel luminance ratio.
Image tone_map(const RadianceMap& radiance, double key, double white);

// White point heuristic: the given percentile of key-scaled luminance.
double default_white(const RadianceMap& radiance, double key, double percentile = 99.5);

}  // namespace moblur
