#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lumenpaint/image.hpp"
#include "lumenpaint/raster.hpp"

namespace lumenpaint {

/// Oriented corner with an optional 3D lift from the frame's fragments.
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double response = 0.0;
  double angle = 0.0;  // radians, [-pi, pi)
  Vec3 world_point = Vec3::Zero();
  bool valid_3d = false;
};

struct DetectorSettings {
  int threshold = 20;             // intensity difference for the segment test
  std::size_t max_keypoints = 500;
};

inline constexpr int kMinFeatureImageSize = 32;
inline constexpr int kOrientationRadius = 15;

/// Offsets of the 16-pixel radius-3 circle, clockwise from the top.
inline constexpr std::array<std::array<int, 2>, 16> kFastCircle = {{{0, -3},
                                                                    {1, -3},
                                                                    {2, -2},
                                                                    {3, -1},
                                                                    {3, 0},
                                                                    {3, 1},
                                                                    {2, 2},
                                                                    {1, 3},
                                                                    {0, 3},
                                                                    {-1, 3},
                                                                    {-2, 2},
                                                                    {-3, 1},
                                                                    {-3, 0},
                                                                    {-3, -1},
                                                                    {-2, -2},
                                                                    {-1, -3}}};

/// True when 9 contiguous circle pixels are all brighter than I(x,y)+t or all
/// darker than I(x,y)-t. (x, y) must be at least 3 pixels from the border.
bool segment_test(const GrayImage& image, int x, int y, int threshold);

/// Sum over the circle of the amount by which each pixel exceeds the
/// threshold, counted for whichever side passes the segment test.
int corner_response(const GrayImage& image, int x, int y, int threshold);

/// Segment-test corners, 3x3 non-maximum suppression, top-K by response
/// (ties broken by row then column), intensity-centroid orientation.
std::vector<Keypoint> detect(const GrayImage& image, const DetectorSettings& settings = {});

/// Angle of the intensity centroid in a disc around (x, y), clipped to the image.
double intensity_centroid_angle(const GrayImage& image, int x, int y, int radius = kOrientationRadius);

using Descriptor = std::array<std::uint64_t, 4>;

/// 256 point pairs inside a radius-15 disc (so every rotation stays in the
/// 31x31 patch), drawn from an isotropic Gaussian with a fixed seed.
struct BriefPattern {
  static constexpr int kBits = 256;
  static constexpr int kRadius = 15;
  std::array<std::array<int, 4>, kBits> pairs{};  // x1, y1, x2, y2
  static BriefPattern make(std::uint64_t seed = 0x0b51ef);
};

/// Smoothing kernel half-width used before intensity comparisons.
inline constexpr int kBriefSmoothRadius = 2;
/// describe keeps keypoints with border <= x < width - border (same for y).
inline constexpr int kDescriptorBorder = BriefPattern::kRadius + kBriefSmoothRadius;

struct DescriptorSet {
  std::vector<Keypoint> keypoints;
  std::vector<Descriptor> descriptors;
  std::size_t dropped = 0;
};

/// Rotated binary descriptor: bit i is set when the 5x5 binomial-smoothed
/// intensity at the first rotated point is strictly less than at the second.
DescriptorSet describe(const GrayImage& image, std::span<const Keypoint> keypoints,
                       const BriefPattern& pattern = BriefPattern::make());

int hamming(const Descriptor& a, const Descriptor& b);

struct Match {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  int distance = 0;
};

inline constexpr int kDefaultMaxHamming = 80;

/// Mutual nearest neighbours under Hamming distance, at most max_distance,
/// ties to the lower index. Sorted by index into `a`.
std::vector<Match> match(std::span<const Descriptor> a, std::span<const Descriptor> b,
                         int max_distance = kDefaultMaxHamming);

/// Attaches world points from the fragment under each keypoint's pixel.
void lift_keypoints(std::span<Keypoint> keypoints, const FragmentBuffer& fragments);

struct PairResult {
  int frame_a = 0;
  int frame_b = 0;
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy() const { return total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

inline constexpr double kDefaultMatchTolerance = 1.0;  // mm

/// A match is correct when both keypoints lie on rendered surface and their
/// world points are closer than `tolerance`.
PairResult verify_matches(std::span<const Match> matches, std::span<const Keypoint> keypoints_a,
                          std::span<const Keypoint> keypoints_b, const FragmentBuffer& fragments_a,
                          const FragmentBuffer& fragments_b, double tolerance = kDefaultMatchTolerance);

struct MatchReport {
  int k = 0;
  std::vector<PairResult> pairs;
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy() const { return total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
  double mean_correct_per_pair() const {
    return pairs.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(pairs.size());
  }
};

struct EvalFrame {
  GrayImage gray;
  FragmentBuffer fragments;
};

struct EvalSettings {
  DetectorSettings detector;
  std::uint64_t descriptor_seed = 0x0b51ef;
  int max_hamming = kDefaultMaxHamming;
  double tolerance = kDefaultMatchTolerance;
};

/// Matches every frame pair (i, i+k). k = 0 pairs each frame with itself.
MatchReport orb_k(std::span<const EvalFrame> frames, int k, const EvalSettings& settings = {});

/// One call per gap, sharing detection and description across gaps.
std::vector<MatchReport> orb_k(std::span<const EvalFrame> frames, std::span<const int> gaps,
                               const EvalSettings& settings = {});

/// CSV with header k,frame_i,total,correct,accuracy: one row per pair, then
/// one aggregate row per report with frame_i = "all".
void write_report_csv(std::span<const MatchReport> reports, const std::filesystem::path& path);
void write_report_json(std::span<const MatchReport> reports, const std::filesystem::path& path);

}  // namespace lumenpaint
