#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

#include "lumenpaint/color.hpp"
#include "lumenpaint/error.hpp"
#include "lumenpaint/image.hpp"
#include "lumenpaint/mesh.hpp"

namespace lumenpaint {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Rows are given as byte spans of `row_bytes` each; 16-bit samples must
// already be big-endian.
void write_png(const std::filesystem::path& path, int width, int height, int color_type, int bit_depth,
               const std::uint8_t* rows, std::size_t row_bytes) {
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "png encoding failed for " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(rows + static_cast<std::size_t>(y) * row_bytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint8_t> bytes;
};

DecodedPng read_png(const std::filesystem::path& path, bool want_rgb) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    throw Error(ErrorCode::kParse, path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kParse, "png decoding failed for " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (want_rgb) {
    if (depth == 16) png_set_strip_16(png);
    png_set_strip_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  }
  png_read_update_info(png, info);

  DecodedPng out;
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  out.bytes.resize(row_bytes * static_cast<std::size_t>(out.height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) rows[static_cast<std::size_t>(y)] = out.bytes.data() + row_bytes * static_cast<std::size_t>(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace

void write_png_rgb(const std::filesystem::path& path, const Rgb8Image& image) {
  write_png(path, image.width, image.height, PNG_COLOR_TYPE_RGB, 8, image.data.data(),
            static_cast<std::size_t>(image.width) * 3);
}

void write_png_gray8(const std::filesystem::path& path, const GrayImage& image) {
  write_png(path, image.width, image.height, PNG_COLOR_TYPE_GRAY, 8, image.data.data(),
            static_cast<std::size_t>(image.width));
}

void write_png_gray16(const std::filesystem::path& path, int width, int height,
                      const std::vector<std::uint16_t>& values) {
  std::vector<std::uint8_t> be(values.size() * 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    be[2 * i] = static_cast<std::uint8_t>(values[i] >> 8);
    be[2 * i + 1] = static_cast<std::uint8_t>(values[i] & 0xff);
  }
  write_png(path, width, height, PNG_COLOR_TYPE_GRAY, 16, be.data(), static_cast<std::size_t>(width) * 2);
}

Rgb8Image read_png_rgb(const std::filesystem::path& path) {
  auto png = read_png(path, true);
  if (png.channels != 3 || png.bit_depth != 8) {
    throw Error(ErrorCode::kParse, path.string() + ": unsupported PNG layout");
  }
  return {png.width, png.height, std::move(png.bytes)};
}

std::vector<std::uint16_t> read_png_gray16(const std::filesystem::path& path, int& width, int& height) {
  auto png = read_png(path, false);
  if (png.channels != 1 || png.bit_depth != 16) {
    throw Error(ErrorCode::kParse, path.string() + ": expected 16-bit grayscale PNG");
  }
  width = png.width;
  height = png.height;
  std::vector<std::uint16_t> values(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<std::uint16_t>((png.bytes[2 * i] << 8) | png.bytes[2 * i + 1]);
  }
  return values;
}

Rgb8Image encode_srgb8(const Image& linear) {
  Rgb8Image out{linear.width, linear.height, std::vector<std::uint8_t>(linear.data.size())};
  for (std::size_t i = 0; i < linear.data.size(); ++i) {
    out.data[i] = quantize_unit(color::srgb_encode(linear.data[i]));
  }
  return out;
}

Image decode_srgb8(const Rgb8Image& bytes) {
  Image out(bytes.width, bytes.height, ColorSpace::kRgbLinear);
  for (std::size_t i = 0; i < bytes.data.size(); ++i) out.data[i] = color::srgb_decode(bytes.data[i] / 255.0);
  return out;
}

GrayImage to_gray(const Rgb8Image& rgb) {
  GrayImage g(rgb.width, rgb.height);
  for (std::size_t p = 0; p < g.data.size(); ++p) {
    const unsigned r = rgb.data[3 * p], gr = rgb.data[3 * p + 1], b = rgb.data[3 * p + 2];
    g.data[p] = static_cast<std::uint8_t>((r * 4899u + gr * 9617u + b * 1868u + 8192u) >> 14);
  }
  return g;
}

}  // namespace lumenpaint
