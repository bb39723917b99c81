#ifndef SPATIALRL_KEYFRAMES_HPP_
#define SPATIALRL_KEYFRAMES_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spatialrl/features.hpp"
#include "spatialrl/geometry.hpp"
#include "spatialrl/homography.hpp"
#include "spatialrl/image.hpp"
#include "spatialrl/matching.hpp"

namespace spatialrl {

struct FrameSequence {
  std::vector<Frame> frames;
  std::string source_id;
  double fps = 0.0;

  // Throws std::invalid_argument if empty or indices are not increasing.
  void validate() const;
};

enum class AcceptReason { kFirst, kBelowThreshold, kGeometryFailure, kFinal, };

std::string_view to_string(AcceptReason reason);
AcceptReason parse_accept_reason(std::string_view text);

struct KeyFrame {
  std::size_t position = 0;     // offset into FrameSequence::frames
  std::int64_t frame_index = 0; // Frame::index of the source frame
  // Overlap against the previous key-frame; empty for the first frame and
  // for geometry failures.
  std::optional<double> overlap;
  AcceptReason reason = AcceptReason::kFirst;
  std::string detail;  // failure message for geometry failures

  bool operator==(const KeyFrame&) const = default;
};

struct KeyFrameSet {
  std::string source_id;
  double epsilon = 0.0;
  std::vector<KeyFrame> keyframes;
  // Set when the budget cap thinned the selection.
  bool capped = false;

  std::vector<std::int64_t> indices() const;
  std::vector<std::size_t> positions() const;
  bool operator==(const KeyFrameSet&) const = default;
};

struct KeyframeConfig {
  double epsilon = 0.6;
  std::size_t max_keyframes = 32;
  // Fewer RANSAC inliers than this counts as a geometry failure.
  std::size_t min_inliers = 8;
  FeatureConfig features;
  MatchConfig matching;
  RansacConfig ransac;
};

struct PairOverlap {
  double ratio = 0.0;
  bool hull_fallback = false;
  std::size_t matches = 0;
  std::size_t inliers = 0;
  Homography model;
};

// Overlap of `candidate` seen from `reference`: the candidate's corners are
// mapped into the reference view by the estimated homography and
// intersected with the reference rectangle; the denominator is the
// reference frame area. Throws GeometryError subclasses on failure.
PairOverlap frame_overlap(const Frame& reference, const FeatureSet& reference_features,
                          const Frame& candidate, const FeatureSet& candidate_features,
                          const KeyframeConfig& config);

// Convenience overload that detects features itself.
PairOverlap frame_overlap(const Frame& reference, const Frame& candidate,
                          const KeyframeConfig& config);

// Greedy scan: each key-frame is compared against subsequent frames until
// one overlaps it by less than epsilon (or geometry fails); that frame
// becomes the next reference. The first and last frames are always kept
// and the result is thinned to max_keyframes.
KeyFrameSet extract_keyframes(const FrameSequence& sequence,
                              const KeyframeConfig& config = {});

// `count` evenly spaced offsets into [0, n), always including both ends.
std::vector<std::size_t> uniform_positions(std::size_t n, std::size_t count);

// Evenly spaced subset of at most max_frames frames (max_frames >= 2).
FrameSequence downsample_uniform(const FrameSequence& sequence, std::size_t max_frames);

}  // namespace spatialrl

#endif  // SPATIALRL_KEYFRAMES_HPP_
