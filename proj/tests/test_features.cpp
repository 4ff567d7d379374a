#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>

#include <json.hpp>

#include "lumenpaint/bundle.hpp"
#include "lumenpaint/error.hpp"
#include "lumenpaint/fixture.hpp"
#include "lumenpaint/random.hpp"
#include "lumenpaint/skeleton.hpp"

namespace fs = std::filesystem;
using namespace lumenpaint;

namespace {

// Written from the textbook definition: some start offset on the 16-circle
// begins a run of nine pixels all beyond the threshold on the same side.
bool brute_segment(const GrayImage& img, int x, int y, int t) {
  static const int circle[16][2] = {{0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},  {3, 1},  {2, 2},  {1, 3},
                                    {0, 3},  {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};
  const int c = img(x, y);
  for (int sign : {1, -1}) {
    for (int start = 0; start < 16; ++start) {
      bool all = true;
      for (int k = 0; k < 9 && all; ++k) {
        const int* o = circle[(start + k) % 16];
        all = sign * (img(x + o[0], y + o[1]) - c) > t;
      }
      if (all) return true;
    }
  }
  return false;
}

GrayImage noise_image(int w, int h, std::uint64_t seed) {
  GrayImage img(w, h);
  SplitMix64 rng(seed);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.next() & 0xff);
  return img;
}

// Smooth random blobs: plenty of corners, stable under small resampling.
GrayImage blob_image(int n, std::uint64_t seed) {
  GrayImage img(n, n);
  SplitMix64 rng(seed);
  std::vector<std::array<double, 4>> blobs(40);
  for (auto& b : blobs) b = {rng.uniform(0, n), rng.uniform(0, n), rng.uniform(2, 6), rng.uniform(-120, 120)};
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double v = 128;
      for (const auto& b : blobs) {
        const double d2 = (x - b[0]) * (x - b[0]) + (y - b[1]) * (y - b[1]);
        v += b[3] * std::exp(-d2 / (2 * b[2] * b[2]));
      }
      img.data[static_cast<std::size_t>(y) * n + x] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return img;
}

// Quarter turn: the pixel at (x, y) moves to (n-1-y, x).
GrayImage rotate90(const GrayImage& img) {
  const int n = img.width;
  GrayImage out(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) out.data[static_cast<std::size_t>(x) * n + (n - 1 - y)] = img(x, y);
  return out;
}

Descriptor random_descriptor(SplitMix64& rng) { return {rng.next(), rng.next(), rng.next(), rng.next()}; }

FragmentBuffer line_of_fragments(std::vector<Vec3> points) {
  FragmentBuffer f;
  f.width = static_cast<int>(points.size());
  f.height = 1;
  for (const auto& p : points) {
    Fragment fr;
    fr.face_id = 0;
    fr.in_mask = true;
    fr.world_point = p;
    f.fragments.push_back(fr);
  }
  return f;
}

Keypoint at_pixel(int x) {
  Keypoint k;
  k.x = x;
  k.y = 0;
  return k;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(Fast, UniformImageHasNoCorners) {
  EXPECT_TRUE(detect(GrayImage(64, 64, 100)).empty());
}

TEST(Fast, IsolatedBrightPixel) {
  GrayImage img(64, 64, 50);
  img.data[20 * 64 + 30] = 200;
  const auto kps = detect(img);
  ASSERT_EQ(kps.size(), 1u);
  EXPECT_EQ(kps[0].x, 30);
  EXPECT_EQ(kps[0].y, 20);
  // Nine of sixteen darker by more than the threshold, times all sixteen.
  EXPECT_EQ(kps[0].response, 16 * (150 - 20));
}

TEST(Fast, SegmentTestMatchesBruteForce) {
  for (std::uint64_t seed : {1u, 2u}) {
    const auto img = noise_image(48, 40, seed);
    for (int t : {10, 40, 90}) {
      for (int y = 3; y < img.height - 3; ++y)
        for (int x = 3; x < img.width - 3; ++x) ASSERT_EQ(segment_test(img, x, y, t), brute_segment(img, x, y, t)) << x << "," << y;
    }
  }
}

TEST(Fast, CheckerboardCornersSurviveSuppression) {
  GrayImage img(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) img.data[static_cast<std::size_t>(y) * 64 + x] = ((x / 8 + y / 8) % 2) ? 220 : 30;
  DetectorSettings s;
  s.max_keypoints = 10000;
  const auto kps = detect(img, s);
  for (const auto& k : kps) EXPECT_TRUE(brute_segment(img, int(k.x), int(k.y), s.threshold));
  // No two kept corners are 8-neighbours.
  for (std::size_t i = 0; i < kps.size(); ++i)
    for (std::size_t j = i + 1; j < kps.size(); ++j)
      EXPECT_FALSE(std::abs(kps[i].x - kps[j].x) <= 1 && std::abs(kps[i].y - kps[j].y) <= 1);

  s.max_keypoints = 5;
  const auto top = detect(img, s);
  EXPECT_LE(top.size(), 5u);
}

TEST(Fast, TooSmallImage) {
  EXPECT_EQ(code_of([] { detect(GrayImage(31, 64)); }), ErrorCode::kImageTooSmall);
}

TEST(Describe, IdenticalAndInverted) {
  const auto img = noise_image(96, 96, 3);
  auto kps = detect(img);
  ASSERT_FALSE(kps.empty());
  const auto a = describe(img, kps);
  const auto again = describe(img, kps);
  ASSERT_FALSE(a.descriptors.empty());
  EXPECT_EQ(a.descriptors, again.descriptors);
  for (const auto& k : a.keypoints) {
    EXPECT_GE(k.x, kDescriptorBorder);
    EXPECT_LT(k.x, 96 - kDescriptorBorder);
  }
  EXPECT_EQ(a.keypoints.size() + a.dropped, kps.size());

  GrayImage inv = img;
  for (auto& v : inv.data) v = static_cast<std::uint8_t>(255 - v);
  const auto b = describe(inv, kps);
  ASSERT_EQ(b.descriptors.size(), a.descriptors.size());
  for (std::size_t i = 0; i < a.descriptors.size(); ++i) EXPECT_GE(hamming(a.descriptors[i], b.descriptors[i]), 240);
}

TEST(Describe, QuarterTurnInvariance) {
  const int n = 128;
  const auto img = blob_image(n, 4);
  const auto rot = rotate90(img);
  const auto da = describe(img, detect(img));
  const auto db = describe(rot, detect(rot));
  int paired = 0;
  std::vector<int> distances;
  for (std::size_t i = 0; i < da.keypoints.size(); ++i) {
    const double rx = n - 1 - da.keypoints[i].y, ry = da.keypoints[i].x;
    for (std::size_t j = 0; j < db.keypoints.size(); ++j) {
      if (db.keypoints[j].x == rx && db.keypoints[j].y == ry) {
        ++paired;
        distances.push_back(hamming(da.descriptors[i], db.descriptors[j]));
      }
    }
  }
  ASSERT_GE(paired, 5);
  std::sort(distances.begin(), distances.end());
  EXPECT_LE(distances[distances.size() / 2], 64);
}

TEST(Match, IdentityRandomAndEmpty) {
  SplitMix64 rng(5);
  std::vector<Descriptor> a(50);
  for (auto& d : a) d = random_descriptor(rng);
  const auto self = match(a, a);
  ASSERT_EQ(self.size(), a.size());
  for (std::size_t i = 0; i < self.size(); ++i) {
    EXPECT_EQ(self[i].a, i);
    EXPECT_EQ(self[i].b, i);
    EXPECT_EQ(self[i].distance, 0);
  }
  std::vector<Descriptor> b(50);
  for (auto& d : b) d = random_descriptor(rng);
  EXPECT_LE(match(a, b).size(), 1u);
  EXPECT_TRUE(match({}, b).empty());
  EXPECT_TRUE(match(a, {}).empty());
}

TEST(Match, NearestIsMutual) {
  Descriptor zero{0, 0, 0, 0};
  Descriptor one{1, 0, 0, 0}, three{3, 0, 0, 0};
  const std::vector<Descriptor> a{zero, three}, b{one};
  const auto m = match(a, b);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].a, 0u);  // tie at distance 1 goes to the lower index
  EXPECT_EQ(m[0].distance, 1);
}

TEST(Verify, ToleranceAndMissingSurface) {
  auto fa = line_of_fragments({{0, 0, 0}, {5, 0, 0}, {9, 0, 0}});
  auto fb = line_of_fragments({{0.5, 0, 0}, {6.5, 0, 0}, {9, 0, 0}});
  fb.fragments[2].face_id = kEmptyFace;
  const std::vector<Keypoint> ka{at_pixel(0), at_pixel(1), at_pixel(2)}, kb{at_pixel(0), at_pixel(1), at_pixel(2)};
  const std::vector<Match> matches{{0, 0, 3}, {1, 1, 4}, {2, 2, 5}};
  const auto r = verify_matches(matches, ka, kb, fa, fb);
  EXPECT_EQ(r.total, 3u);
  EXPECT_EQ(r.correct, 1u);  // 0.5 mm apart; 1.5 mm is too far; empty pixel never counts
  EXPECT_NEAR(r.accuracy(), 100.0 / 3.0, 1e-12);
  EXPECT_EQ(verify_matches(matches, ka, kb, fa, fb, 2.0).correct, 2u);
  EXPECT_EQ(code_of([&] { verify_matches(matches, ka, kb, fa, FragmentBuffer{}); }), ErrorCode::kMissingFragments);
}

class TubeBundle : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    mesh = new TriMesh(make_bent_tube_fixture());
    round_to_float(*mesh);
    const auto skel = skeletonize(*mesh, std::nullopt, 3.0);
    const auto stations = build_poses(skel, order_by_depth(skel, sample_camera_stations(skel, 3)));
    poses = new std::vector<CameraPose>(interpolate_trajectory(stations, 5));
    intr.width = intr.height = 96;
  }
  static void TearDownTestSuite() {
    delete mesh;
    delete poses;
  }

  std::vector<EvalFrame> frames() const {
    std::vector<Vec3> colors;
    for (const auto& v : mesh->vertices) colors.push_back(mock_color(v));
    return eval_frames(render_frames(*mesh, colors, *poses, intr, ShadingMode::kHeadlight));
  }

  static Vec3 mock_color(const Vec3& p) {
    const double s = 0.5 + 0.5 * std::sin(3.1 * p.x()) * std::cos(2.3 * p.y() + p.z());
    return {s, 0.6 * s + 0.2, 1.0 - s};
  }

  static inline TriMesh* mesh = nullptr;
  static inline std::vector<CameraPose>* poses = nullptr;
  static inline Intrinsics intr;
};

TEST_F(TubeBundle, AccuracyIsBoundedAndReproducible) {
  ASSERT_EQ(poses->size(), 11u);
  const auto f = frames();
  const auto self = orb_k(f, 0);
  EXPECT_GT(self.total, 0u);
  EXPECT_EQ(self.correct, self.total);
  EXPECT_EQ(self.accuracy(), 100.0);

  const auto r = orb_k(f, 1);
  EXPECT_EQ(r.pairs.size(), 10u);
  EXPECT_GT(r.total, 0u);
  EXPECT_GT(r.accuracy(), 0.0);
  EXPECT_LT(r.accuracy(), 100.0);
  const auto again = orb_k(frames(), 1);
  EXPECT_EQ(again.total, r.total);
  EXPECT_EQ(again.correct, r.correct);

  EXPECT_EQ(code_of([&] { orb_k(f, 11); }), ErrorCode::kTrajectoryTooShort);
  EXPECT_EQ(code_of([&] { orb_k(f, -1); }), ErrorCode::kInvalidArgument);
}

TEST_F(TubeBundle, ExportLayoutAndDeterminism) {
  const fs::path dir = fs::temp_directory_path() / "lumenpaint_test_bundle";
  fs::remove_all(dir);
  const auto bundle = render_frames(*mesh, {}, *poses, intr, ShadingMode::kHeadlight);
  export_sfm_bundle(bundle, dir / "a");
  export_sfm_bundle(render_frames(*mesh, {}, *poses, intr, ShadingMode::kHeadlight), dir / "b");

  std::size_t pngs = 0, depths = 0;
  for (const auto& e : fs::directory_iterator(dir / "a" / "frames")) pngs += e.path().extension() == ".png";
  for (const auto& e : fs::directory_iterator(dir / "a" / "depth")) depths += e.path().extension() == ".png";
  EXPECT_EQ(pngs, 11u);
  EXPECT_EQ(depths, 11u);
  EXPECT_TRUE(fs::is_regular_file(dir / "a" / "frames" / "frame_00010.png"));

  std::ifstream in(dir / "a" / "camera.json");
  const auto cam = nlohmann::json::parse(in);
  const double fov = 70.0 * std::numbers::pi / 180.0;
  EXPECT_NEAR(cam.at("fx").get<double>(), 96.0 / (2.0 * std::tan(fov / 2.0)), 1e-9);
  EXPECT_EQ(cam.at("cx").get<double>(), 47.5);

  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const auto other = dir / "b" / fs::relative(e.path(), dir / "a");
    std::ifstream x(e.path(), std::ios::binary), y(other, std::ios::binary);
    const std::string bx{std::istreambuf_iterator<char>(x), {}}, by{std::istreambuf_iterator<char>(y), {}};
    EXPECT_EQ(bx, by) << e.path();
  }

  auto loaded = load_sfm_bundle(dir / "a");
  ASSERT_EQ(loaded.frames.size(), 11u);
  EXPECT_EQ(loaded.frames[4].image.data, bundle.frames[4].image.data);
  EXPECT_EQ(loaded.frames[4].depth, bundle.frames[4].depth);
  EXPECT_EQ(code_of([&] { orb_k(eval_frames(loaded), 1); }), ErrorCode::kMissingFragments);
  attach_fragments(loaded, *mesh);
  EXPECT_GT(orb_k(eval_frames(loaded), 1).total, 0u);
}

TEST(ReportCsv, PairRowsThenAggregates) {
  std::vector<MatchReport> reports;
  for (int k : {1, 5, 10}) {
    MatchReport r;
    r.k = k;
    PairResult p;
    p.frame_a = 0;
    p.frame_b = k;
    p.total = 4;
    p.correct = 3;
    r.pairs = {p, p};
    r.total = 8;
    r.correct = 6;
    reports.push_back(r);
  }
  const fs::path path = fs::temp_directory_path() / "lumenpaint_report.csv";
  write_report_csv(reports, path);
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 1u + 6u + 3u);
  EXPECT_EQ(lines[0], "k,frame_i,total,correct,accuracy");
  EXPECT_EQ(lines[1], "1,0,4,3,75.000000");
  EXPECT_EQ(lines[7], "1,all,8,6,75.000000");
  EXPECT_EQ(lines[8], "5,all,8,6,75.000000");
  EXPECT_EQ(lines[9], "10,all,8,6,75.000000");
}
