#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "moblur/errors.hpp"

namespace moblur {

// How pixel lookups behave outside the raster.
enum class BorderPolicy { Replicate, Reflect };

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }

// Axis-aligned box, real-valued top-left corner, size in pixels.
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    Vec2 center() const { return {x + w / 2.0, y + h / 2.0}; }
};

// Single-channel raster, row-major.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Plane() = default;
    Plane(int w, int h, double fill = 0.0);

    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    // Border-extended lookup.
    double sample(int x, int y, BorderPolicy border) const;

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
};

// Three-channel raster in linear light, row-major, interleaved RGB.
// Values are non-negative reals; LDR content lives in [0, 1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, double fill = 0.0);
    Image(int w, int h, const std::array<double, 3>& fill);

    double& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    double at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    bool empty() const { return data.empty(); }
    bool same_size(const Image& other) const {
        return width == other.width && height == other.height;
    }
};

// 8-bit interleaved RGB raster, the on-disk LDR representation.
struct Raster8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    Raster8() = default;
    Raster8(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}
};

// 2-D convolution kernel, odd-sized, weights summing to 1.
struct Kernel {
    int width = 0;
    int height = 0;
    std::vector<double> weights;

    double at(int x, int y) const { return weights[static_cast<std::size_t>(y) * width + x]; }

    static Kernel identity();
};

// IEC 61966-2-1 sRGB electro-optical transfer, byte codes to linear light.
Image srgb_decode(const Raster8& raster);
double srgb_decode_value(std::uint8_t code);

// Inverse transfer with clamp to [0, 1]; round-trips bytes exactly.
Raster8 srgb_encode(const Image& img);
std::uint8_t srgb_encode_value(double v);

// Direct spatial convolution; output has the input's dimensions.
Image convolve2d(const Image& img, const Kernel& kernel, BorderPolicy border);
Plane convolve2d(const Plane& plane, const Kernel& kernel, BorderPolicy border);

// Rec.709 luma weights over linear channels.
Plane luminance(const Image& img);

// Shifts content by (dx, dy): out(x, y) = in(x - dx, y - dy), bilinear.
Image translate_bilinear(const Image& img, double dx, double dy, BorderPolicy border);
Plane translate_bilinear(const Plane& plane, double dx, double dy, BorderPolicy border);

// Throws ContractError if any value is NaN or infinite.
void check_finite(const Image& img, const char* what);

}  // namespace moblur
