#pragma once

#include <vector>

#include "moblur/image.hpp"
#include "moblur/synth.hpp"

namespace moblur {

// Frame stack as a matrix: one row per frame, columns are the flattened
// pixels in row-major, channel-interleaved order.
struct FrameMatrix {
    int frame_count = 0;
    int width = 0;
    int height = 0;
    std::vector<double> values;  // frame_count x (3 * width * height), row-major

    std::size_t cols() const { return static_cast<std::size_t>(width) * height * 3; }
    double* row(int i) { return values.data() + static_cast<std::size_t>(i) * cols(); }
    const double* row(int i) const {
        return values.data() + static_cast<std::size_t>(i) * cols();
    }
};

struct LowRankResult {
    std::vector<Image> background;      // rank-1 reconstruction per frame, floored at 0
    double singular_value = 0.0;
    std::vector<double> frame_weights;  // leading left singular vector, unit norm
    std::vector<double> basis;          // leading right singular vector, unit norm
    int iterations = 0;
};

FrameMatrix stack_frames(const std::vector<Image>& frames);
std::vector<Image> unstack_frames(const FrameMatrix& m);

struct SingularTriple {
    double sigma = 0.0;
    std::vector<double> left;   // unit norm, length rows
    std::vector<double> right;  // unit norm, length cols
    int iterations = 0;
};

// Leading singular triple by power iteration on A^T A, deterministic start
// vector = normalized row mean. Sign: largest-magnitude left entry is positive.
SingularTriple leading_singular_triple(const std::vector<double>& values, int rows,
                                       std::size_t cols);

// Best rank-1 approximation of the stacked frames.
LowRankResult rank1_background(const FrameMatrix& m);

// Luminance-difference threshold, 3x3 morphological open + close, optional
// box feather of the given radius.
Mask extract_mask(const Image& frame, const Image& background, double tau, int feather_radius);

}  // namespace moblur
