#include "boxfuse/error.hpp"
#include "boxfuse/scene_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

namespace boxfuse {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct RawImage16 {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> values;
};

RawImage16 read_gray16(const fs::path& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw Error(ErrorKind::MalformedFile, path.string() + ": not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorKind::IoFailure, "libpng initialisation failed");
    }
    RawImage16 image;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorKind::MalformedFile, path.string() + ": corrupt PNG data");
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    if (bit_depth != 16 || color_type != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorKind::MalformedFile, path.string() + ": expected 16-bit grayscale PNG");
    }
    png_set_swap(png);  // PNG stores 16-bit samples big-endian
    image.width = static_cast<int>(png_get_image_width(png, info));
    image.height = static_cast<int>(png_get_image_height(png, info));
    image.values.resize(static_cast<std::size_t>(image.width) * image.height);
    rows.resize(image.height);
    for (int v = 0; v < image.height; ++v)
        rows[v] = reinterpret_cast<png_bytep>(image.values.data() + static_cast<std::size_t>(v) * image.width);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

}  // namespace

void write_u16_png(const fs::path& path, int width, int height, std::span<const std::uint16_t> values) {
    if (values.size() != static_cast<std::size_t>(width) * height)
        throw Error(ErrorKind::IoFailure, "image buffer size mismatch for " + path.string());
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorKind::IoFailure, "libpng initialisation failed");
    }
    std::vector<png_bytep> rows(height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorKind::IoFailure, "PNG encoding failed for " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_set_swap(png);
    for (int v = 0; v < height; ++v)
        rows[v] = reinterpret_cast<png_bytep>(const_cast<std::uint16_t*>(values.data()) +
                                              static_cast<std::size_t>(v) * width);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

DepthMap read_depth_png(const fs::path& path, double depth_scale) {
    const RawImage16 raw = read_gray16(path);
    DepthMap depth(raw.width, raw.height);
    for (std::size_t i = 0; i < raw.values.size(); ++i) depth.values[i] = raw.values[i] / depth_scale;
    return depth;
}

void write_depth_png(const DepthMap& depth, const fs::path& path, double depth_scale) {
    std::vector<std::uint16_t> raw(depth.values.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double scaled = std::round(depth.values[i] * depth_scale);
        raw[i] = static_cast<std::uint16_t>(std::clamp(scaled, 0.0, 65535.0));
    }
    write_u16_png(path, depth.width, depth.height, raw);
}

}  // namespace boxfuse
