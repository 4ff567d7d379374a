#include "lumenpaint/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "lumenpaint/error.hpp"
#include "lumenpaint/parallel.hpp"
#include "lumenpaint/random.hpp"

namespace lumenpaint {

namespace {

constexpr int kArc = 9;

bool has_arc(const std::array<bool, 16>& flags) {
  int run = 0;
  for (int i = 0; i < 16 + kArc - 1; ++i) {
    run = flags[i % 16] ? run + 1 : 0;
    if (run >= kArc) return true;
  }
  return false;
}

void check_size(const GrayImage& image) {
  if (image.width < kMinFeatureImageSize || image.height < kMinFeatureImageSize) {
    throw Error(ErrorCode::kImageTooSmall, "feature detection needs at least " +
                                               std::to_string(kMinFeatureImageSize) + "x" +
                                               std::to_string(kMinFeatureImageSize) + " pixels, got " +
                                               std::to_string(image.width) + "x" + std::to_string(image.height));
  }
}

// 5x5 binomial sum, unnormalized (weights total 256). Exact integers so that
// an inverted image flips every strict comparison.
std::vector<int> binomial_sums(const GrayImage& image) {
  static constexpr int kTap[5] = {1, 4, 6, 4, 1};
  const int w = image.width, h = image.height;
  std::vector<int> rows(static_cast<std::size_t>(w) * h), out(rows.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int s = 0;
      for (int i = -2; i <= 2; ++i) s += kTap[i + 2] * image(std::clamp(x + i, 0, w - 1), y);
      rows[static_cast<std::size_t>(y) * w + x] = s;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int s = 0;
      for (int i = -2; i <= 2; ++i) s += kTap[i + 2] * rows[static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x];
      out[static_cast<std::size_t>(y) * w + x] = s;
    }
  }
  return out;
}

void check_fragments(const FragmentBuffer& f, const char* which) {
  if (f.width <= 0 || f.height <= 0 || f.fragments.size() != static_cast<std::size_t>(f.width) * f.height) {
    throw Error(ErrorCode::kMissingFragments, std::string("no fragment buffer for frame ") + which);
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

bool segment_test(const GrayImage& image, int x, int y, int threshold) {
  return corner_response(image, x, y, threshold) > 0;
}

int corner_response(const GrayImage& image, int x, int y, int threshold) {
  const int c = image(x, y);
  std::array<bool, 16> brighter{}, darker{};
  std::array<int, 16> value{};
  for (int i = 0; i < 16; ++i) {
    value[i] = image(x + kFastCircle[i][0], y + kFastCircle[i][1]);
    brighter[i] = value[i] > c + threshold;
    darker[i] = value[i] < c - threshold;
  }
  int score = 0;
  if (has_arc(brighter)) {
    for (int v : value) score += std::max(0, v - c - threshold);
  } else if (has_arc(darker)) {
    for (int v : value) score += std::max(0, c - v - threshold);
  }
  return score;
}

double intensity_centroid_angle(const GrayImage& image, int x, int y, int radius) {
  long long m10 = 0, m01 = 0;
  for (int dy = -radius; dy <= radius; ++dy) {
    const int yy = y + dy;
    if (yy < 0 || yy >= image.height) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int xx = x + dx;
      if (xx < 0 || xx >= image.width || dx * dx + dy * dy > radius * radius) continue;
      const int v = image(xx, yy);
      m10 += static_cast<long long>(dx) * v;
      m01 += static_cast<long long>(dy) * v;
    }
  }
  double a = std::atan2(static_cast<double>(m01), static_cast<double>(m10));
  if (a >= std::numbers::pi) a -= 2.0 * std::numbers::pi;
  return a;
}

std::vector<Keypoint> detect(const GrayImage& image, const DetectorSettings& settings) {
  check_size(image);
  const int w = image.width, h = image.height;
  std::vector<int> response(static_cast<std::size_t>(w) * h, 0);
  parallel_for(static_cast<std::size_t>(h - 6), [&](std::size_t r) {
    const int y = static_cast<int>(r) + 3;
    for (int x = 3; x < w - 3; ++x) response[static_cast<std::size_t>(y) * w + x] = corner_response(image, x, y, settings.threshold);
  });

  std::vector<Keypoint> keypoints;
  for (int y = 3; y < h - 3; ++y) {
    for (int x = 3; x < w - 3; ++x) {
      const int r = response[static_cast<std::size_t>(y) * w + x];
      if (r <= 0) continue;
      bool keep = true;
      for (int dy = -1; dy <= 1 && keep; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int n = response[static_cast<std::size_t>(y + dy) * w + (x + dx)];
          // Plateaus keep their first pixel in raster order.
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (n > r || (earlier && n == r)) {
            keep = false;
            break;
          }
        }
      }
      if (keep) keypoints.push_back({static_cast<double>(x), static_cast<double>(y), static_cast<double>(r)});
    }
  }
  std::stable_sort(keypoints.begin(), keypoints.end(),
                   [](const Keypoint& a, const Keypoint& b) { return a.response > b.response; });
  if (keypoints.size() > settings.max_keypoints) keypoints.resize(settings.max_keypoints);
  for (auto& kp : keypoints) {
    kp.angle = intensity_centroid_angle(image, static_cast<int>(kp.x), static_cast<int>(kp.y));
  }
  return keypoints;
}

BriefPattern BriefPattern::make(std::uint64_t seed) {
  BriefPattern p;
  SplitMix64 rng(seed);
  const double sigma = (2 * kRadius + 1) / 5.0;
  auto draw = [&](int& x, int& y) {
    do {
      x = static_cast<int>(std::lround(sigma * rng.normal()));
      y = static_cast<int>(std::lround(sigma * rng.normal()));
    } while (x * x + y * y > kRadius * kRadius);
  };
  for (auto& pair : p.pairs) {
    do {
      draw(pair[0], pair[1]);
      draw(pair[2], pair[3]);
    } while (pair[0] == pair[2] && pair[1] == pair[3]);
  }
  return p;
}

DescriptorSet describe(const GrayImage& image, std::span<const Keypoint> keypoints, const BriefPattern& pattern) {
  DescriptorSet out;
  const int w = image.width, h = image.height;
  const auto sums = binomial_sums(image);
  for (const auto& kp : keypoints) {
    const int x = static_cast<int>(std::lround(kp.x));
    const int y = static_cast<int>(std::lround(kp.y));
    if (x < kDescriptorBorder || y < kDescriptorBorder || x >= w - kDescriptorBorder || y >= h - kDescriptorBorder) {
      ++out.dropped;
      continue;
    }
    const double c = std::cos(kp.angle), s = std::sin(kp.angle);
    auto sample = [&](int px, int py) {
      const int rx = static_cast<int>(std::lround(c * px - s * py));
      const int ry = static_cast<int>(std::lround(s * px + c * py));
      return sums[static_cast<std::size_t>(y + ry) * w + (x + rx)];
    };
    Descriptor d{};
    for (int i = 0; i < BriefPattern::kBits; ++i) {
      const auto& pr = pattern.pairs[i];
      if (sample(pr[0], pr[1]) < sample(pr[2], pr[3])) d[i / 64] |= std::uint64_t{1} << (i % 64);
    }
    out.keypoints.push_back(kp);
    out.descriptors.push_back(d);
  }
  return out;
}

int hamming(const Descriptor& a, const Descriptor& b) {
  int n = 0;
  for (int i = 0; i < 4; ++i) n += std::popcount(a[i] ^ b[i]);
  return n;
}

std::vector<Match> match(std::span<const Descriptor> a, std::span<const Descriptor> b, int max_distance) {
  std::vector<Match> out;
  if (a.empty() || b.empty()) return out;
  std::vector<std::uint32_t> best_b(a.size());
  std::vector<int> best_b_dist(a.size());
  std::vector<std::uint32_t> best_a(b.size(), 0);
  std::vector<int> best_a_dist(b.size(), 1 << 30);
  for (std::size_t i = 0; i < a.size(); ++i) {
    int best = 1 << 30;
    std::uint32_t arg = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const int d = hamming(a[i], b[j]);
      if (d < best) {
        best = d;
        arg = static_cast<std::uint32_t>(j);
      }
      if (d < best_a_dist[j]) {
        best_a_dist[j] = d;
        best_a[j] = static_cast<std::uint32_t>(i);
      }
    }
    best_b[i] = arg;
    best_b_dist[i] = best;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (best_b_dist[i] <= max_distance && best_a[best_b[i]] == i) {
      out.push_back({static_cast<std::uint32_t>(i), best_b[i], best_b_dist[i]});
    }
  }
  return out;
}

void lift_keypoints(std::span<Keypoint> keypoints, const FragmentBuffer& fragments) {
  for (auto& kp : keypoints) {
    const int x = static_cast<int>(std::lround(kp.x));
    const int y = static_cast<int>(std::lround(kp.y));
    kp.valid_3d = false;
    kp.world_point = Vec3::Zero();
    if (x < 0 || y < 0 || x >= fragments.width || y >= fragments.height) continue;
    const auto& f = fragments.at(x, y);
    if (!f.valid()) continue;
    kp.valid_3d = true;
    kp.world_point = f.world_point;
  }
}

PairResult verify_matches(std::span<const Match> matches, std::span<const Keypoint> keypoints_a,
                          std::span<const Keypoint> keypoints_b, const FragmentBuffer& fragments_a,
                          const FragmentBuffer& fragments_b, double tolerance) {
  check_fragments(fragments_a, "A");
  check_fragments(fragments_b, "B");
  std::vector<Keypoint> a(keypoints_a.begin(), keypoints_a.end());
  std::vector<Keypoint> b(keypoints_b.begin(), keypoints_b.end());
  lift_keypoints(a, fragments_a);
  lift_keypoints(b, fragments_b);
  PairResult r;
  for (const auto& m : matches) {
    if (m.a >= a.size() || m.b >= b.size()) {
      throw Error(ErrorCode::kIndexOutOfRange, "match refers to a keypoint that does not exist");
    }
    ++r.total;
    const auto& ka = a[m.a];
    const auto& kb = b[m.b];
    if (ka.valid_3d && kb.valid_3d && (ka.world_point - kb.world_point).norm() < tolerance) ++r.correct;
  }
  return r;
}

std::vector<MatchReport> orb_k(std::span<const EvalFrame> frames, std::span<const int> gaps,
                               const EvalSettings& settings) {
  for (int k : gaps) {
    if (k < 0) throw Error(ErrorCode::kInvalidArgument, "frame gap must be >= 0, got " + std::to_string(k));
    if (static_cast<std::size_t>(k) >= frames.size()) {
      throw Error(ErrorCode::kTrajectoryTooShort, "frame gap " + std::to_string(k) + " needs more than " +
                                                      std::to_string(k) + " frames, trajectory has " +
                                                      std::to_string(frames.size()));
    }
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    check_fragments(frames[i].fragments, std::to_string(i).c_str());
  }
  const auto pattern = BriefPattern::make(settings.descriptor_seed);
  std::vector<DescriptorSet> sets(frames.size());
  // Per-frame work is independent; inner loops then run single-threaded.
  parallel_for(frames.size(), [&](std::size_t i) {
    sets[i] = describe(frames[i].gray, detect(frames[i].gray, settings.detector), pattern);
  });

  std::vector<MatchReport> reports;
  for (int k : gaps) {
    MatchReport report;
    report.k = k;
    const std::size_t n = frames.size() - static_cast<std::size_t>(k);
    report.pairs.resize(n);
    parallel_for(n, [&](std::size_t i) {
      const std::size_t j = i + static_cast<std::size_t>(k);
      const auto matches = match(sets[i].descriptors, sets[j].descriptors, settings.max_hamming);
      auto r = verify_matches(matches, sets[i].keypoints, sets[j].keypoints, frames[i].fragments,
                              frames[j].fragments, settings.tolerance);
      r.frame_a = static_cast<int>(i);
      r.frame_b = static_cast<int>(j);
      report.pairs[i] = r;
    });
    for (const auto& p : report.pairs) {
      report.total += p.total;
      report.correct += p.correct;
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

MatchReport orb_k(std::span<const EvalFrame> frames, int k, const EvalSettings& settings) {
  const int gaps[] = {k};
  return std::move(orb_k(frames, gaps, settings).front());
}

void write_report_csv(std::span<const MatchReport> reports, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "k,frame_i,total,correct,accuracy\n";
  for (const auto& r : reports) {
    for (const auto& p : r.pairs) {
      out << r.k << ',' << p.frame_a << ',' << p.total << ',' << p.correct << ',' << format_double(p.accuracy()) << '\n';
    }
  }
  for (const auto& r : reports) {
    out << r.k << ",all," << r.total << ',' << r.correct << ',' << format_double(r.accuracy()) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

void write_report_json(std::span<const MatchReport> reports, const std::filesystem::path& path) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json e;
    e["k"] = r.k;
    e["pairs"] = r.pairs.size();
    e["total_matches"] = r.total;
    e["correct_matches"] = r.correct;
    e["accuracy_percent"] = r.accuracy();
    e["mean_correct_per_pair"] = r.mean_correct_per_pair();
    j.push_back(e);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

}  // namespace lumenpaint
