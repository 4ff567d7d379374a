#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace lumenpaint {

enum class ColorSpace { kRgbLinear, kSrgb, kLab };

/// Three-channel float image, row-major, interleaved.
struct Image {
  int width = 0;
  int height = 0;
  ColorSpace space = ColorSpace::kRgbLinear;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, ColorSpace cs = ColorSpace::kRgbLinear)
      : width(w), height(h), space(cs), data(static_cast<std::size_t>(w) * h * 3, 0.0) {}

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  double* at(std::size_t p) { return data.data() + 3 * p; }
  const double* at(std::size_t p) const { return data.data() + 3 * p; }
};

/// Single-channel float map (depths, heatmap weights).
struct ScalarMap {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  ScalarMap() = default;
  ScalarMap(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0.0) {}
};

/// 8-bit grayscale raster used by feature detection.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}
  std::uint8_t operator()(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& operator()(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// 8-bit RGB raster as stored in PNG files.
struct Rgb8Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // interleaved RGB
};

// PNG I/O. Writers are deterministic: identical pixels give identical bytes.
void write_png_rgb(const std::filesystem::path& path, const Rgb8Image& image);
void write_png_gray8(const std::filesystem::path& path, const GrayImage& image);
void write_png_gray16(const std::filesystem::path& path, int width, int height,
                      const std::vector<std::uint16_t>& values);
Rgb8Image read_png_rgb(const std::filesystem::path& path);
std::vector<std::uint16_t> read_png_gray16(const std::filesystem::path& path, int& width, int& height);

/// Linear RGB image -> sRGB-encoded bytes.
Rgb8Image encode_srgb8(const Image& linear);
/// sRGB bytes -> linear RGB image.
Image decode_srgb8(const Rgb8Image& bytes);
/// Luma from sRGB bytes (BT.601 weights, fixed-point).
GrayImage to_gray(const Rgb8Image& rgb);

}  // namespace lumenpaint
