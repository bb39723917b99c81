#ifndef SPATIALRL_FEATURES_HPP_
#define SPATIALRL_FEATURES_HPP_

#include <array>
#include <bit>
#include <cstdint>
#include <vector>

#include "spatialrl/image.hpp"

namespace spatialrl {

struct Keypoint {
  float x = 0.0F;  // level-0 pixel coordinates
  float y = 0.0F;
  float response = 0.0F;  // Harris corner strength
  float angle = 0.0F;     // radians in [-pi, pi]
  int octave = 0;         // pyramid level the corner was found on

  bool operator==(const Keypoint&) const = default;
};

// 256-bit steered BRIEF descriptor.
struct Descriptor {
  std::array<std::uint64_t, 4> bits{};

  bool bit(int i) const noexcept { return (bits[i >> 6] >> (i & 63)) & 1U; }
  void set_bit(int i) noexcept { bits[i >> 6] |= std::uint64_t{1} << (i & 63); }
  bool operator==(const Descriptor&) const = default;
};

inline int hamming_distance(const Descriptor& a, const Descriptor& b) noexcept {
  int d = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    d += std::popcount(a.bits[i] ^ b.bits[i]);
  }
  return d;
}

struct FeatureConfig {
  int max_keypoints = 500;
  int fast_threshold = 20;
  int pyramid_levels = 8;
  double scale_factor = 1.2;
  // Keypoints closer than this to the level border are discarded.
  int edge_threshold = 31;
  int patch_size = 31;
  double harris_k = 0.04;
};

struct FeatureSet {
  std::vector<Keypoint> keypoints;      // descending response
  std::vector<Descriptor> descriptors;  // parallel to keypoints
};

// Oriented FAST corners ranked by Harris response, with rotated BRIEF
// descriptors. Deterministic. Throws FrameTooSmall when either dimension is
// below the descriptor patch size.
FeatureSet detect_features(const Frame& frame, const FeatureConfig& config = {});

// Raw FAST-9 segment test at one pixel. Exposed for tests and benchmarks.
bool is_fast_corner(const Frame& image, int x, int y, int threshold);

// The 256 sampling pairs (x1, y1, x2, y2) of the BRIEF test, in patch
// coordinates centered on the keypoint.
const std::array<std::array<std::int8_t, 4>, 256>& brief_pattern();

}  // namespace spatialrl

#endif  // SPATIALRL_FEATURES_HPP_
