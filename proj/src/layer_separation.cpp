#include "moblur/layer_separation.hpp"

#include <algorithm>
#include <cmath>

namespace moblur {

FrameMatrix stack_frames(const std::vector<Image>& frames) {
    require(frames.size() >= 2, "stack_frames: need at least 2 frames");
    for (const Image& f : frames)
        require(f.same_size(frames[0]) && !f.empty(),
                "stack_frames: frame dimensions differ");

    FrameMatrix m;
    m.frame_count = static_cast<int>(frames.size());
    m.width = frames[0].width;
    m.height = frames[0].height;
    m.values.resize(static_cast<std::size_t>(m.frame_count) * m.cols());
    for (int i = 0; i < m.frame_count; ++i)
        std::copy(frames[i].data.begin(), frames[i].data.end(), m.row(i));
    return m;
}

std::vector<Image> unstack_frames(const FrameMatrix& m) {
    require(m.frame_count >= 1 && m.width >= 1 && m.height >= 1,
            "unstack_frames: empty matrix");
    std::vector<Image> frames;
    frames.reserve(static_cast<std::size_t>(m.frame_count));
    for (int i = 0; i < m.frame_count; ++i) {
        Image img(m.width, m.height);
        std::copy(m.row(i), m.row(i) + m.cols(), img.data.begin());
        frames.push_back(std::move(img));
    }
    return frames;
}

SingularTriple leading_singular_triple(const std::vector<double>& values, int rows,
                                       std::size_t cols) {
    require(rows >= 1 && cols >= 1, "leading_singular_triple: empty matrix");
    require(values.size() == static_cast<std::size_t>(rows) * cols,
            "leading_singular_triple: malformed matrix");

    constexpr int kMaxIterations = 500;
    constexpr double kRayleighTol = 1e-12;
    constexpr double kVectorTol = 1e-9;
    auto row = [&](int i) { return values.data() + static_cast<std::size_t>(i) * cols; };

    // Start vector: normalized row mean of A.
    std::vector<double> v(cols, 0.0);
    for (int i = 0; i < rows; ++i) {
        const double* r = row(i);
        for (std::size_t j = 0; j < cols; ++j) v[j] += r[j];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0) {
        for (double& x : v) x /= norm;
    } else {
        std::fill(v.begin(), v.end(), 1.0 / std::sqrt(static_cast<double>(cols)));
    }

    std::vector<double> u(static_cast<std::size_t>(rows), 0.0);
    std::vector<double> v_prev(cols, 0.0);
    double rayleigh = 0.0;
    int iter = 0;
    bool converged = false;
    for (; iter < kMaxIterations; ++iter) {
        // u = A v
        for (int i = 0; i < rows; ++i) {
            const double* r = row(i);
            double acc = 0.0;
            for (std::size_t j = 0; j < cols; ++j) acc += r[j] * v[j];
            u[static_cast<std::size_t>(i)] = acc;
        }
        double lambda = 0.0;  // Rayleigh quotient of A^T A at unit v equals |A v|^2
        for (double x : u) lambda += x * x;
        bool rayleigh_settled =
            std::abs(lambda - rayleigh) <= kRayleighTol * std::max(1.0, std::abs(rayleigh));
        rayleigh = lambda;
        if (lambda == 0.0) {
            converged = true;  // zero matrix, nothing to iterate on
            break;
        }
        // v = A^T u, normalized
        std::swap(v, v_prev);
        std::fill(v.begin(), v.end(), 0.0);
        for (int i = 0; i < rows; ++i) {
            const double* r = row(i);
            double ui = u[static_cast<std::size_t>(i)];
            for (std::size_t j = 0; j < cols; ++j) v[j] += ui * r[j];
        }
        double vn = 0.0;
        for (double x : v) vn += x * x;
        vn = std::sqrt(vn);
        for (double& x : v) x /= vn;

        // Rayleigh settling alone leaves the vectors short of the oracle
        // tolerance when the spectral gap is small, so both must settle.
        double dv = 0.0;
        for (std::size_t j = 0; j < cols; ++j)
            dv = std::max(dv, std::abs(v[j] - v_prev[j]));
        if (rayleigh_settled && dv <= kVectorTol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw NumericalError("leading_singular_triple: power iteration did not converge after " +
                             std::to_string(kMaxIterations) + " iterations");

    SingularTriple triple;
    triple.sigma = std::sqrt(rayleigh);
    triple.iterations = iter + 1;

    // Final u = A v normalized.
    for (int i = 0; i < rows; ++i) {
        const double* r = row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += r[j] * v[j];
        u[static_cast<std::size_t>(i)] = acc;
    }
    double un = 0.0;
    for (double x : u) un += x * x;
    un = std::sqrt(un);
    if (un > 0) {
        for (double& x : u) x /= un;
    } else {
        std::fill(u.begin(), u.end(), 0.0);
        u[0] = 1.0;
    }
    triple.sigma = un;

    // Largest-magnitude left entry positive.
    int peak = 0;
    for (int i = 1; i < rows; ++i)
        if (std::abs(u[static_cast<std::size_t>(i)]) > std::abs(u[static_cast<std::size_t>(peak)]))
            peak = i;
    if (u[static_cast<std::size_t>(peak)] < 0) {
        for (double& x : u) x = -x;
        for (double& x : v) x = -x;
    }
    triple.left = std::move(u);
    triple.right = std::move(v);
    return triple;
}

LowRankResult rank1_background(const FrameMatrix& m) {
    require(m.frame_count >= 2, "rank1_background: need at least 2 frames");
    const std::size_t cols = m.cols();
    require(cols > 0 && m.values.size() == static_cast<std::size_t>(m.frame_count) * cols,
            "rank1_background: malformed matrix");

    SingularTriple triple = leading_singular_triple(m.values, m.frame_count, cols);

    LowRankResult result;
    result.singular_value = triple.sigma;
    result.iterations = triple.iterations;
    result.frame_weights = std::move(triple.left);
    result.basis = std::move(triple.right);
    result.background.reserve(static_cast<std::size_t>(m.frame_count));
    for (int i = 0; i < m.frame_count; ++i) {
        Image img(m.width, m.height);
        double scale = result.singular_value * result.frame_weights[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < cols; ++j)
            img.data[j] = std::max(0.0, scale * result.basis[j]);
        result.background.push_back(std::move(img));
    }
    return result;
}

namespace {

Plane morph3x3(const Plane& in, bool dilate) {
    Plane out(in.width, in.height);
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            double v = dilate ? 0.0 : 1.0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    double s = in.sample(x + dx, y + dy, BorderPolicy::Replicate);
                    v = dilate ? std::max(v, s) : std::min(v, s);
                }
            }
            out.at(x, y) = v;
        }
    }
    return out;
}

Plane box_blur(const Plane& in, int radius) {
    Plane out(in.width, in.height);
    const double count = (2.0 * radius + 1) * (2.0 * radius + 1);
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            double acc = 0.0;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx)
                    acc += in.sample(x + dx, y + dy, BorderPolicy::Replicate);
            // Division keeps saturated neighborhoods at exactly 1.
            out.at(x, y) = acc / count;
        }
    }
    return out;
}

}  // namespace

Mask extract_mask(const Image& frame, const Image& background, double tau, int feather_radius) {
    require(frame.same_size(background), "extract_mask: dimensions differ");
    require(tau > 0, "extract_mask: tau must be positive");
    require(feather_radius >= 0, "extract_mask: feather radius must be non-negative");

    Plane lum_frame = luminance(frame);
    Plane lum_bg = luminance(background);
    Mask mask(frame.width, frame.height);
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        mask.data[i] = std::abs(lum_frame.data[i] - lum_bg.data[i]) > tau ? 1.0 : 0.0;

    mask = morph3x3(mask, false);  // open: erode then dilate
    mask = morph3x3(mask, true);
    mask = morph3x3(mask, true);  // close: dilate then erode
    mask = morph3x3(mask, false);

    if (feather_radius > 0) mask = box_blur(mask, feather_radius);
    return mask;
}

}  // namespace moblur
