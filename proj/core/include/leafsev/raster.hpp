#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace leafsev {

/// Owned 8-bit RGB pixel grid, row major, three bytes per pixel.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RasterImage() = default;
  RasterImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}
  RasterImage(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);

  std::uint8_t* pixel(int x, int y) {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  const std::uint8_t* pixel(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  bool operator==(const RasterImage&) const = default;
};

/// Row-major plane of unit-interval scalars with image dimensions.
struct ScalarPlane {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Decodes a PNG, baseline JPEG, or binary PPM (P6) stream. Alpha, when
/// present, is composited over white. Throws DecodeError on malformed input
/// and FormatError on unsupported containers.
RasterImage decode_image(std::span<const std::uint8_t> bytes);

/// Encodes 8-bit RGB PNG. decode_image(encode_png(x)) == x.
std::vector<std::uint8_t> encode_png(const RasterImage& img);

/// Bilinear resize with half-pixel-centered sampling. Identical targets give
/// a pixel-identical copy; constant images stay constant.
RasterImage resize_bilinear(const RasterImage& img, int target_w, int target_h);

/// Brightness layer: per pixel max(R, G, B) / 255.
ScalarPlane value_channel(const RasterImage& img);

}  // namespace leafsev
