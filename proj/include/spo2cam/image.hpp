/**
 * @file image.hpp
 * @brief 8-bit image container, PNG I/O, grayscale conversion, crop/resize.
 */

#ifndef SPO2CAM_IMAGE_HPP
#define SPO2CAM_IMAGE_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "spo2cam/types.hpp"

namespace spo2cam {

/// Interleaved 8-bit image, 1 (gray) or 3 (RGB) channels, row-major.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(int w, int h, int c) : width(w), height(h), channels(c),
                                 data(static_cast<std::size_t>(w) * h * c, 0) {}

    std::uint8_t& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

/// Float grayscale image used by the optical-flow tracker.
struct GrayImageF {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    GrayImageF() = default;
    GrayImageF(int w, int h) : width(w), height(h),
                               data(static_cast<std::size_t>(w) * h, 0.f) {}

    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

Image load_png(const std::filesystem::path& path);

/// Writes via a temporary file + rename so partially written frames never
/// appear under the final name.
void save_png(const std::filesystem::path& path, const Image& img);

/// ITU-R 601 luma.
GrayImageF to_gray(const Image& rgb);

/// Mean RGB over the whole image (must be 3-channel).
RgbTriple mean_rgb(const Image& img);

/// Crop `box` (clamped fully inside the frame, size preserved) and
/// bilinearly resize to target_w x target_h. Sampling uses half-pixel
/// centers: src = (dst + 0.5) * scale - 0.5, edge-clamped.
Image extract_roi(const Image& frame, const RoiBox& box, int target_w, int target_h);

Image resize_bilinear(const Image& src, int target_w, int target_h);

} // namespace spo2cam

#endif // SPO2CAM_IMAGE_HPP
