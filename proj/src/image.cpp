/**
 * @file image.cpp
 * @brief PNG I/O (libpng simplified API) and basic raster operations.
 */

#include "spo2cam/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>

#include "spo2cam/errors.hpp"

namespace spo2cam {

Image load_png(const std::filesystem::path& path) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;

    if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
        throw IoError("png read failed: " + path.string() + ": " + png.message);
    }

    const int channels = PNG_IMAGE_PIXEL_CHANNELS(png.format) >= 3 ? 3 : 1;
    png.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    Image img(static_cast<int>(png.width), static_cast<int>(png.height), channels);
    if (!png_image_finish_read(&png, nullptr, img.data.data(), 0, nullptr)) {
        png_image_free(&png);
        throw IoError("png decode failed: " + path.string() + ": " + png.message);
    }
    return img;
}

void save_png(const std::filesystem::path& path, const Image& img) {
    if (img.channels != 1 && img.channels != 3) {
        throw IoError("save_png: unsupported channel count " + std::to_string(img.channels));
    }
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(img.width);
    png.height = static_cast<png_uint_32>(img.height);
    png.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    const std::filesystem::path tmp = path.string() + ".tmp";
    if (!png_image_write_to_file(&png, tmp.string().c_str(), 0, img.data.data(), 0, nullptr)) {
        std::remove(tmp.string().c_str());
        throw IoError("png write failed: " + path.string() + ": " + png.message);
    }
    std::filesystem::rename(tmp, path);
}

GrayImageF to_gray(const Image& rgb) {
    GrayImageF gray(rgb.width, rgb.height);
    if (rgb.channels == 1) {
        for (std::size_t i = 0; i < rgb.data.size(); ++i)
            gray.data[i] = static_cast<float>(rgb.data[i]);
        return gray;
    }
    const std::uint8_t* p = rgb.data.data();
    for (std::size_t i = 0; i < gray.data.size(); ++i, p += 3) {
        gray.data[i] = 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2];
    }
    return gray;
}

RgbTriple mean_rgb(const Image& img) {
    if (img.channels != 3) throw ShapeMismatch("mean_rgb expects a 3-channel image");
    double sum[3] = {0.0, 0.0, 0.0};
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    const std::uint8_t* p = img.data.data();
    for (std::size_t i = 0; i < n; ++i, p += 3) {
        sum[0] += p[0];
        sum[1] += p[1];
        sum[2] += p[2];
    }
    const double inv = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
    return {sum[0] * inv, sum[1] * inv, sum[2] * inv};
}

Image resize_bilinear(const Image& src, int target_w, int target_h) {
    if (target_w <= 0 || target_h <= 0) throw ShapeMismatch("resize target must be positive");
    if (src.width == target_w && src.height == target_h) return src;

    Image dst(target_w, target_h, src.channels);
    const double sx = static_cast<double>(src.width) / target_w;
    const double sy = static_cast<double>(src.height) / target_h;

    for (int y = 0; y < target_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        if (fy < 0.0) fy = 0.0;
        int y0 = static_cast<int>(fy);
        if (y0 > src.height - 1) y0 = src.height - 1;
        int y1 = y0 + 1 < src.height ? y0 + 1 : src.height - 1;
        const double wy = fy - y0;

        for (int x = 0; x < target_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            if (fx < 0.0) fx = 0.0;
            int x0 = static_cast<int>(fx);
            if (x0 > src.width - 1) x0 = src.width - 1;
            int x1 = x0 + 1 < src.width ? x0 + 1 : src.width - 1;
            const double wx = fx - x0;

            for (int c = 0; c < src.channels; ++c) {
                const double top = src.at(x0, y0, c) * (1.0 - wx) + src.at(x1, y0, c) * wx;
                const double bot = src.at(x0, y1, c) * (1.0 - wx) + src.at(x1, y1, c) * wx;
                const double value = top * (1.0 - wy) + bot * wy;
                dst.at(x, y, c) = static_cast<std::uint8_t>(std::lround(value));
            }
        }
    }
    return dst;
}

Image extract_roi(const Image& frame, const RoiBox& box, int target_w, int target_h) {
    if (target_w <= 0 || target_h <= 0) throw ShapeMismatch("extract_roi target must be positive");
    const RoiBox b = box.clamped(frame.width, frame.height);

    int x0 = b.left();
    int y0 = b.top();
    if (x0 < 0) x0 = 0;
    if (y0 < 0) y0 = 0;
    if (x0 + b.width > frame.width) x0 = frame.width - b.width;
    if (y0 + b.height > frame.height) y0 = frame.height - b.height;

    Image crop(b.width, b.height, frame.channels);
    for (int y = 0; y < b.height; ++y) {
        const std::uint8_t* srow =
            frame.data.data() +
            (static_cast<std::size_t>(y0 + y) * frame.width + x0) * frame.channels;
        std::uint8_t* drow =
            crop.data.data() + static_cast<std::size_t>(y) * b.width * frame.channels;
        std::memcpy(drow, srow, static_cast<std::size_t>(b.width) * frame.channels);
    }
    return resize_bilinear(crop, target_w, target_h);
}

} // namespace spo2cam
