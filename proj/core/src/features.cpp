#include "spatialrl/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spatialrl/errors.hpp"

namespace spatialrl {

namespace {

// Bresenham circle of radius 3, clockwise from 12 o'clock.
constexpr std::array<std::array<int, 2>, 16> kCircle = {{{0, -3},
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

constexpr int kHarrisBlock = 7;
constexpr int kOrientationRadius = 15;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double unit_uniform(std::uint64_t& state) {
  return (static_cast<double>(splitmix64(state) >> 11) + 0.5) * 0x1.0p-53;
}

// Isotropic Gaussian test locations (sigma = patch/5), kept inside a
// radius-13 disc so that rotated samples stay within the 31x31 patch.
std::array<std::array<std::int8_t, 4>, 256> make_pattern() {
  std::array<std::array<std::int8_t, 4>, 256> pattern{};
  std::uint64_t state = 0x0B5EED5EEDULL;
  const double sigma = 31.0 / 5.0;
  auto sample_point = [&](std::int8_t& px, std::int8_t& py) {
    for (;;) {
      const double u1 = unit_uniform(state);
      const double u2 = unit_uniform(state);
      const double r = sigma * std::sqrt(-2.0 * std::log(u1));
      const double x = std::round(r * std::cos(2.0 * std::numbers::pi * u2));
      const double y = std::round(r * std::sin(2.0 * std::numbers::pi * u2));
      if (x * x + y * y <= 13.0 * 13.0) {
        px = static_cast<std::int8_t>(x);
        py = static_cast<std::int8_t>(y);
        return;
      }
    }
  };
  for (auto& p : pattern) {
    do {
      sample_point(p[0], p[1]);
      sample_point(p[2], p[3]);
    } while (p[0] == p[2] && p[1] == p[3]);
  }
  return pattern;
}

Frame resize_bilinear(const Frame& src, int width, int height) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(width) * height);
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(src.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(src.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      const double top = src.at(x0, y0) * (1 - wx) + src.at(x1, y0) * wx;
      const double bottom = src.at(x0, y1) * (1 - wx) + src.at(x1, y1) * wx;
      out[static_cast<std::size_t>(y) * width + x] =
          static_cast<std::uint8_t>(std::lround(top * (1 - wy) + bottom * wy));
    }
  }
  return Frame(width, height, std::move(out));
}

// Separable 7-tap Gaussian, sigma 2, replicated borders.
Frame gaussian_blur(const Frame& src) {
  std::array<double, 7> k{};
  double sum = 0.0;
  for (int i = 0; i < 7; ++i) {
    k[i] = std::exp(-((i - 3) * (i - 3)) / (2.0 * 2.0 * 2.0));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  const int w = src.width();
  const int h = src.height();
  std::vector<double> tmp(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -3; i <= 3; ++i) acc += k[i + 3] * src.at(std::clamp(x + i, 0, w - 1), y);
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  std::vector<std::uint8_t> out(tmp.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -3; i <= 3; ++i) {
        acc += k[i + 3] * tmp[static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] =
          static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
    }
  }
  return Frame(w, h, std::move(out));
}

double harris_response(const Frame& img, int cx, int cy, double k) {
  // Sobel gradients normalized so responses are O(1) for 8-bit images.
  const double scale = 1.0 / (4.0 * kHarrisBlock * 255.0);
  double a = 0.0, b = 0.0, c = 0.0;
  const int r = kHarrisBlock / 2;
  for (int y = cy - r; y <= cy + r; ++y) {
    for (int x = cx - r; x <= cx + r; ++x) {
      const double ix = (img.at(x + 1, y - 1) + 2.0 * img.at(x + 1, y) + img.at(x + 1, y + 1) -
                         img.at(x - 1, y - 1) - 2.0 * img.at(x - 1, y) - img.at(x - 1, y + 1)) *
                        scale;
      const double iy = (img.at(x - 1, y + 1) + 2.0 * img.at(x, y + 1) + img.at(x + 1, y + 1) -
                         img.at(x - 1, y - 1) - 2.0 * img.at(x, y - 1) - img.at(x + 1, y - 1)) *
                        scale;
      a += ix * ix;
      b += iy * iy;
      c += ix * iy;
    }
  }
  return a * b - c * c - k * (a + b) * (a + b);
}

float intensity_centroid_angle(const Frame& img, int cx, int cy) {
  double m01 = 0.0, m10 = 0.0;
  for (int dy = -kOrientationRadius; dy <= kOrientationRadius; ++dy) {
    const int span = static_cast<int>(std::sqrt(
        static_cast<double>(kOrientationRadius * kOrientationRadius - dy * dy)));
    for (int dx = -span; dx <= span; ++dx) {
      const double v = img.at(cx + dx, cy + dy);
      m10 += dx * v;
      m01 += dy * v;
    }
  }
  return static_cast<float>(std::atan2(m01, m10));
}

Descriptor steered_brief(const Frame& blurred, int cx, int cy, float angle) {
  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  Descriptor d;
  const auto& pattern = brief_pattern();
  for (int i = 0; i < 256; ++i) {
    const auto& p = pattern[i];
    const int x1 = cx + static_cast<int>(std::lround(p[0] * cs - p[1] * sn));
    const int y1 = cy + static_cast<int>(std::lround(p[0] * sn + p[1] * cs));
    const int x2 = cx + static_cast<int>(std::lround(p[2] * cs - p[3] * sn));
    const int y2 = cy + static_cast<int>(std::lround(p[2] * sn + p[3] * cs));
    if (blurred.at(x1, y1) < blurred.at(x2, y2)) d.set_bit(i);
  }
  return d;
}

struct Candidate {
  int x;
  int y;
  double response;
};

struct Detected {
  Keypoint keypoint;
  Descriptor descriptor;
};

void detect_level(const Frame& img, int level, double level_scale, int quota,
                  const FeatureConfig& config, std::vector<Detected>& out) {
  const int border = std::max(config.edge_threshold, kOrientationRadius + 1);
  const int w = img.width();
  const int h = img.height();
  if (w <= 2 * border || h <= 2 * border || quota <= 0) return;

  std::vector<double> score(static_cast<std::size_t>(w) * h, 0.0);
  std::vector<Candidate> corners;
  for (int y = border; y < h - border; ++y) {
    for (int x = border; x < w - border; ++x) {
      if (!is_fast_corner(img, x, y, config.fast_threshold)) continue;
      const double r = harris_response(img, x, y, config.harris_k);
      if (!(r > 0.0)) continue;
      score[static_cast<std::size_t>(y) * w + x] = r;
      corners.push_back({x, y, r});
    }
  }
  // 3x3 non-maximum suppression; equal neighbors keep the first in raster order.
  std::vector<Candidate> kept;
  for (const auto& c : corners) {
    bool is_max = true;
    for (int dy = -1; dy <= 1 && is_max; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const double s = score[static_cast<std::size_t>(c.y + dy) * w + c.x + dx];
        const bool earlier = dy < 0 || (dy == 0 && dx < 0);
        if (s > c.response || (s == c.response && earlier)) {
          is_max = false;
          break;
        }
      }
    }
    if (is_max) kept.push_back(c);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Candidate& a, const Candidate& b) {
    return a.response > b.response;
  });
  if (static_cast<int>(kept.size()) > quota) kept.resize(static_cast<std::size_t>(quota));

  const Frame blurred = gaussian_blur(img);
  for (const auto& c : kept) {
    Detected d;
    d.keypoint.x = static_cast<float>(c.x * level_scale);
    d.keypoint.y = static_cast<float>(c.y * level_scale);
    d.keypoint.response = static_cast<float>(c.response);
    d.keypoint.angle = intensity_centroid_angle(img, c.x, c.y);
    d.keypoint.octave = level;
    d.descriptor = steered_brief(blurred, c.x, c.y, d.keypoint.angle);
    out.push_back(d);
  }
}

}  // namespace

const std::array<std::array<std::int8_t, 4>, 256>& brief_pattern() {
  static const auto pattern = make_pattern();
  return pattern;
}

bool is_fast_corner(const Frame& image, int x, int y, int threshold) {
  const int center = image.at(x, y);
  // Quick rejection on the four compass points: a 9-arc covers at least
  // two of them.
  int bright = 0, dark = 0;
  for (int i = 0; i < 16; i += 4) {
    const int v = image.at(x + kCircle[i][0], y + kCircle[i][1]);
    bright += v > center + threshold;
    dark += v < center - threshold;
  }
  if (bright < 2 && dark < 2) return false;

  std::array<int, 16> state{};
  for (int i = 0; i < 16; ++i) {
    const int v = image.at(x + kCircle[i][0], y + kCircle[i][1]);
    state[i] = v > center + threshold ? 1 : (v < center - threshold ? -1 : 0);
  }
  for (const int want : {1, -1}) {
    int run = 0;
    for (int i = 0; i < 32; ++i) {
      if (state[i & 15] == want) {
        if (++run >= 9) return true;
      } else {
        run = 0;
      }
    }
  }
  return false;
}

FeatureSet detect_features(const Frame& frame, const FeatureConfig& config) {
  if (config.max_keypoints <= 0) {
    throw std::invalid_argument("max_keypoints must be positive");
  }
  if (config.pyramid_levels <= 0 || !(config.scale_factor > 1.0)) {
    throw std::invalid_argument("invalid pyramid configuration");
  }
  if (frame.width() < config.patch_size || frame.height() < config.patch_size) {
    throw FrameTooSmall("frame " + std::to_string(frame.width()) + "x" +
                        std::to_string(frame.height()) +
                        " is smaller than the descriptor patch");
  }

  // Per-level quota follows the geometric area falloff of the pyramid.
  const double f = 1.0 / config.scale_factor;
  const int levels = config.pyramid_levels;
  std::vector<int> quota(static_cast<std::size_t>(levels));
  double per_level = config.max_keypoints * (1.0 - f) / (1.0 - std::pow(f, levels));
  int assigned = 0;
  for (int l = 0; l < levels - 1; ++l) {
    quota[l] = static_cast<int>(std::lround(per_level));
    assigned += quota[l];
    per_level *= f;
  }
  quota[levels - 1] = std::max(config.max_keypoints - assigned, 0);

  std::vector<Detected> all;
  for (int l = 0; l < levels; ++l) {
    const double s = std::pow(config.scale_factor, l);
    const int w = static_cast<int>(std::lround(frame.width() / s));
    const int h = static_cast<int>(std::lround(frame.height() / s));
    if (w < config.patch_size || h < config.patch_size) break;
    if (l == 0) {
      detect_level(frame, 0, 1.0, quota[0], config, all);
    } else {
      detect_level(resize_bilinear(frame, w, h), l, s, quota[l], config, all);
    }
  }

  std::stable_sort(all.begin(), all.end(), [](const Detected& a, const Detected& b) {
    if (a.keypoint.response != b.keypoint.response) {
      return a.keypoint.response > b.keypoint.response;
    }
    if (a.keypoint.octave != b.keypoint.octave) return a.keypoint.octave < b.keypoint.octave;
    if (a.keypoint.y != b.keypoint.y) return a.keypoint.y < b.keypoint.y;
    return a.keypoint.x < b.keypoint.x;
  });
  if (static_cast<int>(all.size()) > config.max_keypoints) {
    all.resize(static_cast<std::size_t>(config.max_keypoints));
  }
  FeatureSet out;
  out.keypoints.reserve(all.size());
  out.descriptors.reserve(all.size());
  for (const auto& d : all) {
    out.keypoints.push_back(d.keypoint);
    out.descriptors.push_back(d.descriptor);
  }
  return out;
}

}  // namespace spatialrl
