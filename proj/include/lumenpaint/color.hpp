#pragma once

#include <algorithm>
#include <cmath>

#include "lumenpaint/geometry.hpp"

namespace lumenpaint::color {

// sRGB primaries, D65 white, 2 degree observer.
inline const Mat3& rgb_to_xyz_matrix() {
  static const Mat3 m = (Mat3() << 0.4124564, 0.3575761, 0.1804375,
                                   0.2126729, 0.7151522, 0.0721750,
                                   0.0193339, 0.1191920, 0.9503041).finished();
  return m;
}

// Reference white is the image of RGB (1,1,1), so every gray maps to a = b = 0
// exactly; it agrees with tabulated D65 to about 1e-5.
inline constexpr double kWhiteX = 0.4124564 + 0.3575761 + 0.1804375;
inline constexpr double kWhiteY = 0.2126729 + 0.7151522 + 0.0721750;
inline constexpr double kWhiteZ = 0.0193339 + 0.1191920 + 0.9503041;

inline constexpr double kDelta = 6.0 / 29.0;
inline constexpr double kDeltaCubed = kDelta * kDelta * kDelta;

inline double lab_f(double t) {
  return t > kDeltaCubed ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

inline double lab_f_derivative(double t) {
  if (t > kDeltaCubed) {
    const double c = std::cbrt(t);
    return 1.0 / (3.0 * c * c);
  }
  return 1.0 / (3.0 * kDelta * kDelta);
}

/// Linear RGB (clamped to [0,1]) -> CIELAB (L in [0,100]).
inline Vec3 rgb_to_lab(const Vec3& rgb) {
  const Vec3 c = rgb.cwiseMax(0.0).cwiseMin(1.0);
  const Vec3 xyz = rgb_to_xyz_matrix() * c;
  const double fx = lab_f(xyz.x() / kWhiteX);
  const double fy = lab_f(xyz.y() / kWhiteY);
  const double fz = lab_f(xyz.z() / kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

/// d(L,a,b)/d(r,g,b). Components outside [0,1] are clamped in the forward map
/// and receive zero derivative.
inline Mat3 lab_jacobian(const Vec3& rgb) {
  const Vec3 c = rgb.cwiseMax(0.0).cwiseMin(1.0);
  const Mat3& m = rgb_to_xyz_matrix();
  const Vec3 xyz = m * c;
  const double dfx = lab_f_derivative(xyz.x() / kWhiteX) / kWhiteX;
  const double dfy = lab_f_derivative(xyz.y() / kWhiteY) / kWhiteY;
  const double dfz = lab_f_derivative(xyz.z() / kWhiteZ) / kWhiteZ;
  Mat3 jf = Mat3::Zero();  // d(L,a,b)/d(X,Y,Z)
  jf(0, 1) = 116.0 * dfy;
  jf(1, 0) = 500.0 * dfx;
  jf(1, 1) = -500.0 * dfy;
  jf(2, 1) = 200.0 * dfy;
  jf(2, 2) = -200.0 * dfz;
  Mat3 j = jf * m;
  for (int k = 0; k < 3; ++k) {
    if (rgb[k] < 0.0 || rgb[k] > 1.0) j.col(k).setZero();
  }
  return j;
}

/// Per-channel scales of the normalized form (L/100, (a+128)/255, (b+128)/255).
inline Vec3 lab_normalization_scale() { return {1.0 / 100.0, 1.0 / 255.0, 1.0 / 255.0}; }

inline Vec3 normalize_lab(const Vec3& lab) {
  return {lab.x() / 100.0, (lab.y() + 128.0) / 255.0, (lab.z() + 128.0) / 255.0};
}

inline Vec3 denormalize_lab(const Vec3& n) {
  return {n.x() * 100.0, n.y() * 255.0 - 128.0, n.z() * 255.0 - 128.0};
}

inline Vec3 rgb_to_lab_normalized(const Vec3& rgb) { return normalize_lab(rgb_to_lab(rgb)); }

inline Mat3 lab_normalized_jacobian(const Vec3& rgb) {
  return lab_normalization_scale().asDiagonal() * lab_jacobian(rgb);
}

inline double srgb_encode(double linear) {
  const double x = std::clamp(linear, 0.0, 1.0);
  return x <= 0.0031308 ? 12.92 * x : 1.055 * std::pow(x, 1.0 / 2.4) - 0.055;
}

inline double srgb_decode(double encoded) {
  const double x = std::clamp(encoded, 0.0, 1.0);
  return x <= 0.04045 ? x / 12.92 : std::pow((x + 0.055) / 1.055, 2.4);
}

}  // namespace lumenpaint::color
