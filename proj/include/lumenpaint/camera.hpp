#pragma once

#include <cmath>
#include <numbers>

#include "lumenpaint/geometry.hpp"

namespace lumenpaint {

/// Camera-to-world rigid transform. Rotation columns are (right, down,
/// forward): a right-handed frame in the usual computer-vision convention, so
/// camera-space +x maps to image columns and +y to image rows.
struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 position = Vec3::Zero();
  int pose_id = 0;

  Vec3 right() const { return rotation.col(0); }
  Vec3 up() const { return -rotation.col(1); }
  Vec3 forward() const { return rotation.col(2); }

  Vec3 world_to_camera(const Vec3& p) const { return rotation.transpose() * (p - position); }
  Vec3 camera_to_world(const Vec3& c) const { return rotation * c + position; }
};

/// Pinhole intrinsics. Pixel (row i, column j) has its center at image
/// coordinate (u, v) = (j, i); the principal point is ((w-1)/2, (h-1)/2).
struct Intrinsics {
  int width = 256;
  int height = 256;
  double vertical_fov = 70.0;  // degrees
  double near = 0.1;           // mm
  double far = 100.0;          // mm

  double focal() const {
    return static_cast<double>(height) / (2.0 * std::tan(vertical_fov * std::numbers::pi / 360.0));
  }
  double cx() const { return static_cast<double>(width) / 2.0 - 0.5; }
  double cy() const { return static_cast<double>(height) / 2.0 - 0.5; }

  /// Camera-space ray direction (z = 1) through image coordinate (u, v).
  Vec3 ray(double u, double v) const { return {(u - cx()) / focal(), (v - cy()) / focal(), 1.0}; }

  bool valid() const {
    return width > 0 && height > 0 && vertical_fov > 0.0 && vertical_fov < 180.0 && near > 0.0 &&
           near < far;
  }
};

}  // namespace lumenpaint
