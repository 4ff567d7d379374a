#include <gtest/gtest.h>

#include <filesystem>

#include "lumenpaint/color.hpp"
#include "lumenpaint/image.hpp"
#include "lumenpaint/random.hpp"

namespace fs = std::filesystem;
using namespace lumenpaint;

// Reference values from an independent CIE implementation (D65, 2 degree),
// computed outside this code base before it was written.
TEST(Lab, ReferenceValues) {
  struct Case {
    Vec3 rgb, lab;
  };
  const Case cases[] = {
      {{1, 1, 1}, {100.0, 0.0, 0.0}},
      {{0, 0, 0}, {0.0, 0.0, 0.0}},
      {{0.5, 0.5, 0.5}, {76.0692610, 0.0, 0.0}},
      {{1, 0, 0}, {53.2406, 80.0923, 67.2028}},
      {{0.2, 0.6, 0.9}, {78.2620, -13.9037, -27.2790}},
  };
  for (const auto& c : cases) {
    const Vec3 lab = color::rgb_to_lab(c.rgb);
    EXPECT_NEAR((lab - c.lab).cwiseAbs().maxCoeff(), 0.0, 0.02) << c.rgb.transpose();
  }
}

TEST(Lab, NormalizedRange) {
  const Vec3 n = color::rgb_to_lab_normalized({1, 1, 1});
  EXPECT_NEAR(n.x(), 1.0, 1e-4);
  EXPECT_NEAR(n.y(), 128.0 / 255.0, 1e-4);
  const Vec3 lab(53.0, -20.0, 40.0);
  EXPECT_NEAR((color::denormalize_lab(color::normalize_lab(lab)) - lab).norm(), 0.0, 1e-12);
}

TEST(LabJacobian, MatchesFiniteDifferences) {
  SplitMix64 rng(41);
  const double h = 1e-5;
  for (int i = 0; i < 100; ++i) {
    const Vec3 rgb(rng.uniform(0.02, 0.98), rng.uniform(0.02, 0.98), rng.uniform(0.02, 0.98));
    Mat3 fd;
    for (int k = 0; k < 3; ++k) {
      Vec3 up = rgb, down = rgb;
      up[k] += h;
      down[k] -= h;
      fd.col(k) = (color::rgb_to_lab(up) - color::rgb_to_lab(down)) / (2 * h);
    }
    const Mat3 j = color::lab_jacobian(rgb);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(j(r, c), fd(r, c), 1e-4 * std::max(1.0, std::abs(fd(r, c))));
  }
}

TEST(LabJacobian, GrayAxisHasNoChroma) {
  for (double g : {0.05, 0.3, 0.7, 0.95}) {
    const Mat3 j = color::lab_jacobian(Vec3::Constant(g));
    EXPECT_NEAR(j.row(1).dot(Vec3::Ones()), 0.0, 1e-6);
    EXPECT_NEAR(j.row(2).dot(Vec3::Ones()), 0.0, 1e-6);
    const Vec3 lab = color::rgb_to_lab(Vec3::Constant(g));
    EXPECT_NEAR(lab.y(), 0.0, 1e-9);
    EXPECT_NEAR(lab.z(), 0.0, 1e-9);
  }
}

TEST(LabJacobian, LinearSegmentIsConstant) {
  // Below the cube-root knee the map is affine, so the Jacobian is fixed.
  const Mat3 a = color::lab_jacobian(Vec3(0.001, 0.002, 0.0015));
  const Mat3 b = color::lab_jacobian(Vec3(0.003, 0.001, 0.002));
  EXPECT_NEAR((a - b).norm(), 0.0, 1e-9);
  const double slope = 1.0 / (3.0 * color::kDelta * color::kDelta);
  Mat3 jf = Mat3::Zero();
  jf(0, 1) = 116.0 * slope / color::kWhiteY;
  jf(1, 0) = 500.0 * slope / color::kWhiteX;
  jf(1, 1) = -500.0 * slope / color::kWhiteY;
  jf(2, 1) = 200.0 * slope / color::kWhiteY;
  jf(2, 2) = -200.0 * slope / color::kWhiteZ;
  EXPECT_NEAR((a - jf * color::rgb_to_xyz_matrix()).norm(), 0.0, 1e-9);
}

TEST(LabJacobian, ClampedComponentsHaveZeroDerivative) {
  const Mat3 j = color::lab_jacobian(Vec3(1.2, 0.5, -0.1));
  EXPECT_EQ(j.col(0).norm(), 0.0);
  EXPECT_EQ(j.col(2).norm(), 0.0);
  EXPECT_GT(j.col(1).norm(), 0.0);
}

TEST(Srgb, Endpoints) {
  EXPECT_EQ(color::srgb_encode(0.0), 0.0);
  EXPECT_NEAR(color::srgb_encode(1.0), 1.0, 1e-12);
  EXPECT_NEAR(color::srgb_encode(0.0031308), 0.04045, 1e-6);
}

TEST(Srgb, RoundTrip) {
  SplitMix64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform();
    EXPECT_NEAR(color::srgb_decode(color::srgb_encode(x)), x, 1e-6);
  }
}

TEST(Srgb, EightBitRoundTrip) {
  Rgb8Image img;
  img.width = 256;
  img.height = 1;
  for (int i = 0; i < 256; ++i) img.data.insert(img.data.end(), {std::uint8_t(i), std::uint8_t(255 - i), 7});
  EXPECT_EQ(encode_srgb8(decode_srgb8(img)).data, img.data);
}

TEST(Png, RoundTripAndGray) {
  const fs::path dir = fs::temp_directory_path() / "lumenpaint_test_color";
  fs::create_directories(dir);
  Rgb8Image img;
  img.width = 5;
  img.height = 3;
  for (int i = 0; i < 15; ++i) img.data.insert(img.data.end(), {std::uint8_t(17 * i), 255, std::uint8_t(i)});
  write_png_rgb(dir / "a.png", img);
  const auto back = read_png_rgb(dir / "a.png");
  EXPECT_EQ(back.width, 5);
  EXPECT_EQ(back.height, 3);
  EXPECT_EQ(back.data, img.data);

  std::vector<std::uint16_t> depth{0, 1, 65535, 300, 42, 7};
  write_png_gray16(dir / "d.png", 3, 2, depth);
  int w = 0, h = 0;
  EXPECT_EQ(read_png_gray16(dir / "d.png", w, h), depth);
  EXPECT_EQ(w, 3);

  Rgb8Image white{1, 1, {255, 255, 255}};
  EXPECT_EQ(to_gray(white).data[0], 255);
}
