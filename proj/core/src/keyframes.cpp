#include "spatialrl/keyframes.hpp"

#include <cmath>
#include <stdexcept>

#include "spatialrl/errors.hpp"

namespace spatialrl {

void FrameSequence::validate() const {
  if (frames.empty()) throw std::invalid_argument("frame sequence is empty");
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].index() <= frames[i - 1].index()) {
      throw std::invalid_argument("frame indices must be strictly increasing");
    }
  }
}

std::string_view to_string(AcceptReason reason) {
  switch (reason) {
    case AcceptReason::kFirst:
      return "first";
    case AcceptReason::kBelowThreshold:
      return "below-threshold";
    case AcceptReason::kGeometryFailure:
      return "geometry-failure";
    case AcceptReason::kFinal:
      return "final";
  }
  return "unknown";
}

AcceptReason parse_accept_reason(std::string_view text) {
  for (auto r : {AcceptReason::kFirst, AcceptReason::kBelowThreshold,
                 AcceptReason::kGeometryFailure, AcceptReason::kFinal}) {
    if (to_string(r) == text) return r;
  }
  throw std::invalid_argument("unknown accept reason: " + std::string(text));
}

std::vector<std::int64_t> KeyFrameSet::indices() const {
  std::vector<std::int64_t> out;
  out.reserve(keyframes.size());
  for (const auto& k : keyframes) out.push_back(k.frame_index);
  return out;
}

std::vector<std::size_t> KeyFrameSet::positions() const {
  std::vector<std::size_t> out;
  out.reserve(keyframes.size());
  for (const auto& k : keyframes) out.push_back(k.position);
  return out;
}

PairOverlap frame_overlap(const Frame& reference, const FeatureSet& reference_features,
                          const Frame& candidate, const FeatureSet& candidate_features,
                          const KeyframeConfig& config) {
  const auto matches = match_descriptors(candidate_features.descriptors,
                                         reference_features.descriptors, config.matching);
  if (matches.size() < 4) {
    throw InsufficientMatches("only " + std::to_string(matches.size()) +
                              " descriptor matches");
  }
  std::vector<PointPair> pairs;
  pairs.reserve(matches.size());
  for (const auto& m : matches) {
    const Keypoint& c = candidate_features.keypoints[m.index_a];
    const Keypoint& r = reference_features.keypoints[m.index_b];
    pairs.push_back({{c.x, c.y}, {r.x, r.y}});
  }
  const RansacResult fit = estimate_homography_ransac(pairs, config.ransac);
  if (fit.inlier_count < config.min_inliers) {
    throw EstimationFailed("homography supported by only " + std::to_string(fit.inlier_count) +
                           " inliers");
  }
  const Quadrilateral mapped = transform_corners(
      fit.model, Quadrilateral::rectangle(candidate.width(), candidate.height()));
  const double area = static_cast<double>(reference.width()) * reference.height();
  const OverlapResult overlap =
      overlap_ratio(Quadrilateral::rectangle(reference.width(), reference.height()),
                    mapped, area);
  PairOverlap out;
  out.ratio = overlap.ratio;
  out.hull_fallback = overlap.hull_fallback;
  out.matches = matches.size();
  out.inliers = fit.inlier_count;
  out.model = fit.model;
  return out;
}

PairOverlap frame_overlap(const Frame& reference, const Frame& candidate,
                          const KeyframeConfig& config) {
  return frame_overlap(reference, detect_features(reference, config.features), candidate,
                       detect_features(candidate, config.features), config);
}

std::vector<std::size_t> uniform_positions(std::size_t n, std::size_t count) {
  std::vector<std::size_t> out;
  if (n == 0) return out;
  if (count >= n) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  if (count < 2) throw std::invalid_argument("uniform subset needs at least 2 slots");
  const double step = static_cast<double>(n - 1) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(static_cast<std::size_t>(std::llround(step * static_cast<double>(i))));
  }
  return out;
}

FrameSequence downsample_uniform(const FrameSequence& sequence, std::size_t max_frames) {
  if (max_frames < 2) throw std::invalid_argument("max_frames must be at least 2");
  FrameSequence out;
  out.source_id = sequence.source_id;
  out.fps = sequence.fps;
  for (std::size_t p : uniform_positions(sequence.frames.size(), max_frames)) {
    out.frames.push_back(sequence.frames[p]);
  }
  return out;
}

KeyFrameSet extract_keyframes(const FrameSequence& sequence, const KeyframeConfig& config) {
  sequence.validate();
  if (!(config.epsilon > 0.0 && config.epsilon < 1.0)) {
    throw std::invalid_argument("epsilon must lie in (0, 1)");
  }
  if (config.max_keyframes < 2) throw std::invalid_argument("max_keyframes must be at least 2");

  const auto& frames = sequence.frames;
  KeyFrameSet out;
  out.source_id = sequence.source_id;
  out.epsilon = config.epsilon;
  out.keyframes.push_back({0, frames[0].index(), std::nullopt, AcceptReason::kFirst, {}});

  // Features of a frame that cannot host a descriptor patch stay empty, so
  // every comparison against it fails to match.
  auto features_of = [&](const Frame& f) {
    try {
      return detect_features(f, config.features);
    } catch (const FrameTooSmall&) {
      return FeatureSet{};
    }
  };

  std::size_t ref = 0;
  FeatureSet ref_features = features_of(frames[0]);
  std::optional<double> last_overlap;
  for (std::size_t pos = 1; pos < frames.size(); ++pos) {
    FeatureSet cand_features = features_of(frames[pos]);
    KeyFrame accepted{pos, frames[pos].index(), std::nullopt, AcceptReason::kBelowThreshold, {}};
    bool accept = false;
    try {
      const PairOverlap o =
          frame_overlap(frames[ref], ref_features, frames[pos], cand_features, config);
      last_overlap = o.ratio;
      if (o.ratio < config.epsilon) {
        accepted.overlap = o.ratio;
        accept = true;
      }
    } catch (const GeometryError& e) {
      last_overlap.reset();
      accepted.reason = AcceptReason::kGeometryFailure;
      accepted.detail = e.what();
      accept = true;
    }
    if (accept) {
      out.keyframes.push_back(std::move(accepted));
      ref = pos;
      ref_features = std::move(cand_features);
    } else if (pos + 1 == frames.size()) {
      out.keyframes.push_back(
          {pos, frames[pos].index(), last_overlap, AcceptReason::kFinal, {}});
    }
  }

  if (out.keyframes.size() > config.max_keyframes) {
    std::vector<KeyFrame> thinned;
    for (std::size_t p : uniform_positions(out.keyframes.size(), config.max_keyframes)) {
      thinned.push_back(out.keyframes[p]);
    }
    out.keyframes = std::move(thinned);
    out.capped = true;
  }
  return out;
}

}  // namespace spatialrl
