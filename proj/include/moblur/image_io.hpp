#pragma once

#include <string>
#include <vector>

#include "moblur/image.hpp"

namespace moblur {

// 8-bit PNG. Grayscale, palette, and alpha inputs are converted to plain RGB.
Raster8 read_png(const std::string& path);
void write_png(const std::string& path, const Raster8& raster);

// Convenience: PNG bytes through the sRGB transfer.
Image read_image_png(const std::string& path);
void write_image_png(const std::string& path, const Image& img);

// Plane written as 8-bit grayscale, values clamped to [0, 1], no transfer.
void write_plane_png(const std::string& path, const Plane& plane);

// PFM color float map: "PF\n<w> <h>\n-1.0\n" then raw little-endian float
// RGB rows, bottom to top.
void write_pfm(const std::string& path, const Image& img);
Image read_pfm(const std::string& path);

// printf-style frame pattern with a single integer conversion (frame_%06d.png).
std::string format_frame_path(const std::string& pattern, int index);
std::vector<std::string> expand_frame_pattern(const std::string& pattern, int first, int last);

}  // namespace moblur
