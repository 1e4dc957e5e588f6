#include "moblur/image.hpp"

#include <algorithm>
#include <cmath>

namespace moblur {

namespace {

int extend_index(int i, int n, BorderPolicy border) {
    if (i >= 0 && i < n) return i;
    if (border == BorderPolicy::Replicate) return std::clamp(i, 0, n - 1);
    // Reflect without repeating the edge sample: -1 -> 0 is wrong, -1 -> 0? Use
    // the "reflect101"-style mirror about the edge pixel centers: -1 -> 1, n -> n-2.
    if (n == 1) return 0;
    int period = 2 * (n - 1);
    int j = std::abs(i) % period;
    return j < n ? j : period - j;
}

void validate_kernel(const Kernel& kernel) {
    require(kernel.width >= 1 && kernel.height >= 1, "convolve2d: empty kernel");
    require(kernel.width % 2 == 1 && kernel.height % 2 == 1,
            "convolve2d: kernel dimensions must be odd");
    require(kernel.weights.size() ==
                static_cast<std::size_t>(kernel.width) * kernel.height,
            "convolve2d: kernel weight count does not match dimensions");
    double sum = 0.0;
    for (double w : kernel.weights) sum += w;
    require(std::abs(sum - 1.0) <= 1e-6, "convolve2d: kernel weights must sum to 1");
}

}  // namespace

Plane::Plane(int w, int h, double fill) : width(w), height(h) {
    require(w >= 1 && h >= 1, "Plane: dimensions must be at least 1x1");
    data.assign(static_cast<std::size_t>(w) * h, fill);
}

double Plane::sample(int x, int y, BorderPolicy border) const {
    return at(extend_index(x, width, border), extend_index(y, height, border));
}

Image::Image(int w, int h, double fill) : width(w), height(h) {
    require(w >= 1 && h >= 1, "Image: dimensions must be at least 1x1");
    data.assign(static_cast<std::size_t>(w) * h * 3, fill);
}

Image::Image(int w, int h, const std::array<double, 3>& fill) : width(w), height(h) {
    require(w >= 1 && h >= 1, "Image: dimensions must be at least 1x1");
    data.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < data.size(); i += 3) {
        data[i] = fill[0];
        data[i + 1] = fill[1];
        data[i + 2] = fill[2];
    }
}

Kernel Kernel::identity() {
    return Kernel{1, 1, {1.0}};
}

double srgb_decode_value(std::uint8_t code) {
    double c = code / 255.0;
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

std::uint8_t srgb_encode_value(double v) {
    double y = std::clamp(v, 0.0, 1.0);
    double c = y <= 0.0031308 ? 12.92 * y : 1.055 * std::pow(y, 1.0 / 2.4) - 0.055;
    return static_cast<std::uint8_t>(std::lround(255.0 * c));
}

Image srgb_decode(const Raster8& raster) {
    require(raster.width >= 1 && raster.height >= 1, "srgb_decode: zero-sized raster");
    require(raster.data.size() == static_cast<std::size_t>(raster.width) * raster.height * 3,
            "srgb_decode: raster byte count does not match dimensions");
    static const auto lut = [] {
        std::array<double, 256> t{};
        for (int i = 0; i < 256; ++i) t[i] = srgb_decode_value(static_cast<std::uint8_t>(i));
        return t;
    }();
    Image out(raster.width, raster.height);
    for (std::size_t i = 0; i < raster.data.size(); ++i) out.data[i] = lut[raster.data[i]];
    return out;
}

Raster8 srgb_encode(const Image& img) {
    require(!img.empty(), "srgb_encode: empty image");
    Raster8 out(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = srgb_encode_value(img.data[i]);
    return out;
}

Image convolve2d(const Image& img, const Kernel& kernel, BorderPolicy border) {
    require(!img.empty(), "convolve2d: empty image");
    validate_kernel(kernel);
    const int rx = kernel.width / 2;
    const int ry = kernel.height / 2;
    Image out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc[3] = {0.0, 0.0, 0.0};
            for (int ky = -ry; ky <= ry; ++ky) {
                int sy = extend_index(y + ky, img.height, border);
                for (int kx = -rx; kx <= rx; ++kx) {
                    int sx = extend_index(x + kx, img.width, border);
                    double w = kernel.at(kx + rx, ky + ry);
                    acc[0] += w * img.at(sx, sy, 0);
                    acc[1] += w * img.at(sx, sy, 1);
                    acc[2] += w * img.at(sx, sy, 2);
                }
            }
            out.at(x, y, 0) = acc[0];
            out.at(x, y, 1) = acc[1];
            out.at(x, y, 2) = acc[2];
        }
    }
    return out;
}

Plane convolve2d(const Plane& plane, const Kernel& kernel, BorderPolicy border) {
    require(!plane.empty(), "convolve2d: empty plane");
    validate_kernel(kernel);
    const int rx = kernel.width / 2;
    const int ry = kernel.height / 2;
    Plane out(plane.width, plane.height);
    for (int y = 0; y < plane.height; ++y) {
        for (int x = 0; x < plane.width; ++x) {
            double acc = 0.0;
            for (int ky = -ry; ky <= ry; ++ky) {
                int sy = extend_index(y + ky, plane.height, border);
                for (int kx = -rx; kx <= rx; ++kx) {
                    int sx = extend_index(x + kx, plane.width, border);
                    acc += kernel.at(kx + rx, ky + ry) * plane.at(sx, sy);
                }
            }
            out.at(x, y) = acc;
        }
    }
    return out;
}

Plane luminance(const Image& img) {
    require(!img.empty(), "luminance: empty image");
    Plane out(img.width, img.height);
    const double* p = img.data.data();
    for (std::size_t i = 0; i < out.data.size(); ++i, p += 3)
        out.data[i] = 0.2126 * p[0] + 0.7152 * p[1] + 0.0722 * p[2];
    return out;
}

namespace {

template <typename GetT>
double bilinear_at(double sx, double sy, int w, int h, BorderPolicy border, GetT get) {
    double fx = std::floor(sx);
    double fy = std::floor(sy);
    int x0 = static_cast<int>(fx);
    int y0 = static_cast<int>(fy);
    double ax = sx - fx;
    double ay = sy - fy;
    int x0c = extend_index(x0, w, border);
    int x1c = extend_index(x0 + 1, w, border);
    int y0c = extend_index(y0, h, border);
    int y1c = extend_index(y0 + 1, h, border);
    double v00 = get(x0c, y0c);
    double v10 = get(x1c, y0c);
    double v01 = get(x0c, y1c);
    double v11 = get(x1c, y1c);
    return (1 - ay) * ((1 - ax) * v00 + ax * v10) + ay * ((1 - ax) * v01 + ax * v11);
}

}  // namespace

Image translate_bilinear(const Image& img, double dx, double dy, BorderPolicy border) {
    require(!img.empty(), "translate_bilinear: empty image");
    Image out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double sx = x - dx;
            double sy = y - dy;
            for (int c = 0; c < 3; ++c) {
                out.at(x, y, c) = bilinear_at(sx, sy, img.width, img.height, border,
                                              [&](int i, int j) { return img.at(i, j, c); });
            }
        }
    }
    return out;
}

Plane translate_bilinear(const Plane& plane, double dx, double dy, BorderPolicy border) {
    require(!plane.empty(), "translate_bilinear: empty plane");
    Plane out(plane.width, plane.height);
    for (int y = 0; y < plane.height; ++y) {
        for (int x = 0; x < plane.width; ++x) {
            out.at(x, y) = bilinear_at(x - dx, y - dy, plane.width, plane.height, border,
                                       [&](int i, int j) { return plane.at(i, j); });
        }
    }
    return out;
}

void check_finite(const Image& img, const char* what) {
    for (double v : img.data) {
        if (!std::isfinite(v))
            throw ContractError(std::string(what) + ": non-finite pixel value");
    }
}

}  // namespace moblur
