#include "moblur/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace moblur {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Raster8 read_png(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw IoError("cannot open file: " + path);

    png_byte header[8];
    if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
        throw IoError("not a PNG file: " + path);

    png_structp reader = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(reader);
    if (setjmp(png_jmpbuf(reader))) {
        png_destroy_read_struct(&reader, &info, nullptr);
        throw IoError("PNG decode failed: " + path);
    }
    png_init_io(reader, file.get());
    png_set_sig_bytes(reader, 8);
    png_read_info(reader, info);

    png_uint_32 width = png_get_image_width(reader, info);
    png_uint_32 height = png_get_image_height(reader, info);
    int color_type = png_get_color_type(reader, info);
    int bit_depth = png_get_bit_depth(reader, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(reader);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(reader);
    if (png_get_valid(reader, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(reader);
    if (bit_depth == 16) png_set_strip_16(reader);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(reader);
    png_set_strip_alpha(reader);
    png_read_update_info(reader, info);

    Raster8 out(static_cast<int>(width), static_cast<int>(height));
    std::vector<png_bytep> rows(height);
    for (png_uint_32 y = 0; y < height; ++y)
        rows[y] = out.data.data() + static_cast<std::size_t>(y) * width * 3;
    png_read_image(reader, rows.data());
    png_read_end(reader, nullptr);
    png_destroy_read_struct(&reader, &info, nullptr);
    return out;
}

void write_png(const std::string& path, const Raster8& raster) {
    require(raster.width >= 1 && raster.height >= 1, "write_png: empty raster");
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IoError("cannot open file for writing: " + path);

    png_structp writer = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(writer);
    if (setjmp(png_jmpbuf(writer))) {
        png_destroy_write_struct(&writer, &info);
        throw IoError("PNG encode failed: " + path);
    }
    png_init_io(writer, file.get());
    png_set_IHDR(writer, info, raster.width, raster.height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(writer, info);
    std::vector<png_bytep> rows(raster.height);
    for (int y = 0; y < raster.height; ++y)
        rows[y] = const_cast<png_bytep>(raster.data.data()) +
                  static_cast<std::size_t>(y) * raster.width * 3;
    png_write_image(writer, rows.data());
    png_write_end(writer, nullptr);
    png_destroy_write_struct(&writer, &info);
}

Image read_image_png(const std::string& path) {
    return srgb_decode(read_png(path));
}

void write_image_png(const std::string& path, const Image& img) {
    write_png(path, srgb_encode(img));
}

void write_plane_png(const std::string& path, const Plane& plane) {
    require(!plane.empty(), "write_plane_png: empty plane");
    Raster8 raster(plane.width, plane.height);
    for (std::size_t i = 0; i < plane.data.size(); ++i) {
        double v = std::clamp(plane.data[i], 0.0, 1.0);
        auto code = static_cast<std::uint8_t>(std::lround(255.0 * v));
        raster.data[i * 3] = code;
        raster.data[i * 3 + 1] = code;
        raster.data[i * 3 + 2] = code;
    }
    write_png(path, raster);
}

void write_pfm(const std::string& path, const Image& img) {
    require(!img.empty(), "write_pfm: empty image");
    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open file for writing: " + path);
    file << "PF\n" << img.width << " " << img.height << "\n-1.0\n";
    std::vector<float> row(static_cast<std::size_t>(img.width) * 3);
    for (int y = img.height - 1; y >= 0; --y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                row[static_cast<std::size_t>(x) * 3 + c] = static_cast<float>(img.at(x, y, c));
        file.write(reinterpret_cast<const char*>(row.data()),
                   static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!file) throw IoError("short write: " + path);
}

Image read_pfm(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open file: " + path);
    std::string magic;
    int width = 0, height = 0;
    double scale = 0.0;
    file >> magic >> width >> height >> scale;
    if (magic != "PF" || width < 1 || height < 1)
        throw IoError("not a color PFM file: " + path);
    if (scale >= 0) throw IoError("big-endian PFM not supported: " + path);
    file.get();  // single whitespace after the scale line
    Image out(width, height);
    std::vector<float> row(static_cast<std::size_t>(width) * 3);
    for (int y = height - 1; y >= 0; --y) {
        file.read(reinterpret_cast<char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!file) throw IoError("truncated PFM file: " + path);
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = row[static_cast<std::size_t>(x) * 3 + c];
    }
    return out;
}

namespace {

// Accepts exactly one %d / %0Nd conversion; rejects everything else.
void validate_pattern(const std::string& pattern) {
    int conversions = 0;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        if (pattern[i] != '%') continue;
        if (i + 1 < pattern.size() && pattern[i + 1] == '%') {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < pattern.size() && (std::isdigit(static_cast<unsigned char>(pattern[j]))))
            ++j;
        if (j >= pattern.size() || pattern[j] != 'd')
            throw ConfigError("frame pattern must use a single %d or %0Nd conversion: " +
                              pattern);
        ++conversions;
        i = j;
    }
    if (conversions != 1)
        throw ConfigError("frame pattern must contain exactly one %d conversion: " + pattern);
}

}  // namespace

std::string format_frame_path(const std::string& pattern, int index) {
    validate_pattern(pattern);
    char buf[4096];
    int n = std::snprintf(buf, sizeof(buf), pattern.c_str(), index);
    if (n < 0 || n >= static_cast<int>(sizeof(buf)))
        throw ConfigError("frame pattern expands to an oversized path: " + pattern);
    return std::string(buf, static_cast<std::size_t>(n));
}

std::vector<std::string> expand_frame_pattern(const std::string& pattern, int first, int last) {
    if (last < first)
        throw ConfigError("frame range is empty: " + std::to_string(first) + ".." +
                          std::to_string(last));
    std::vector<std::string> paths;
    paths.reserve(static_cast<std::size_t>(last - first + 1));
    for (int i = first; i <= last; ++i) paths.push_back(format_frame_path(pattern, i));
    return paths;
}

}  // namespace moblur
