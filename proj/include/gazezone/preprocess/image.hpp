#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gazezone/core/types.hpp"

namespace gazezone::preprocess {

/// 8-bit interleaved RGB raster.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    Image() = default;
    Image(int w, int h, std::uint8_t fill = 0) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}

    bool empty() const { return width <= 0 || height <= 0; }
    std::uint8_t* at(int x, int y) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const std::uint8_t* at(int x, int y) const { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }

    bool operator==(const Image&) const = default;
};

/// A decoded frame together with the locator it came from.
struct Frame {
    std::string ref;
    Image image;
};

Image load_image(const std::filesystem::path& path);
void save_image(const Image& image, const std::filesystem::path& path);
Frame load_frame(const std::string& frame_ref);

/// Copy of the pixels inside rect (which must lie within the image).
Image crop(const Image& image, const BBox& rect);

/// Bilinear resampling of an interleaved float raster with half-pixel
/// centres and edge clamping. Identical inputs give bit-identical outputs.
std::vector<float> resize_bilinear(std::span<const float> src, int src_w, int src_h, int channels, int dst_w,
                                   int dst_h);

}  // namespace gazezone::preprocess
