#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lumenpaint/features.hpp"
#include "lumenpaint/raster.hpp"

namespace lumenpaint {

/// Base color for meshes without a texture.
inline Vec3 untextured_color() { return {0.9, 0.75, 0.7}; }

struct RenderedFrame {
  CameraPose pose;
  Rgb8Image image;                 // sRGB
  std::vector<std::uint16_t> depth;  // quantized, 0 where empty
  FragmentBuffer fragments;        // empty after loading from disk
};

struct FrameBundle {
  Intrinsics intrinsics;
  std::vector<RenderedFrame> frames;
};

/// Millimetres per depth unit: the far plane maps to 65535.
inline double depth_unit_mm(const Intrinsics& intrinsics) { return intrinsics.far / 65535.0; }

std::vector<std::uint16_t> quantize_depth(const FragmentBuffer& fragments, const Intrinsics& intrinsics);

/// Renders every pose. `colors` may be empty, in which case the uniform
/// untextured color is used.
FrameBundle render_frames(const TriMesh& mesh, std::span<const Vec3> colors, std::span<const CameraPose> poses,
                          const Intrinsics& intrinsics, ShadingMode shading);

/// Layout: frames/frame_NNNNN.png, depth/depth_NNNNN.png (16-bit),
/// poses.json, cameras.txt (one PINHOLE line), camera.json (intrinsics,
/// principal-point convention, depth scale).
void export_sfm_bundle(const FrameBundle& bundle, const std::filesystem::path& out_dir);

/// Reads a bundle back. Fragments are not stored; see attach_fragments.
FrameBundle load_sfm_bundle(const std::filesystem::path& dir);

/// Re-rasterizes every frame's pose against `mesh`.
void attach_fragments(FrameBundle& bundle, const TriMesh& mesh);

/// Grayscale frames with their fragments, ready for orb_k.
std::vector<EvalFrame> eval_frames(const FrameBundle& bundle);

}  // namespace lumenpaint
