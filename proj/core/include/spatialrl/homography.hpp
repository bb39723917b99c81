#ifndef SPATIALRL_HOMOGRAPHY_HPP_
#define SPATIALRL_HOMOGRAPHY_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spatialrl/geometry.hpp"

namespace spatialrl {

// A correspondence; the estimated model maps src onto dst.
struct PointPair {
  Point2 src;
  Point2 dst;
};

struct RansacConfig {
  double reprojection_threshold = 3.0;  // pixels
  int max_iterations = 2000;
  double confidence = 0.995;
  std::uint64_t seed = 0;
};

struct RansacResult {
  Homography model;
  std::vector<std::uint8_t> inlier_mask;  // parallel to the input pairs
  std::size_t inlier_count = 0;
  int iterations = 0;
};

// Normalized direct linear transform, least squares over all pairs.
// Returns nullopt when the system is degenerate.
std::optional<Homography> fit_homography(std::span<const PointPair> pairs);

// Euclidean distance between model(src) and dst; +inf when src maps to
// infinity.
double reprojection_error(const Homography& model, const PointPair& pair);

// True if any three of the four points are (nearly) collinear.
bool has_collinear_triple(const std::array<Point2, 4>& pts);

// Robust fit with adaptive iteration count and least-squares refinement on
// the consensus set. Throws InsufficientMatches for fewer than four pairs
// and EstimationFailed when no non-degenerate model is found.
RansacResult estimate_homography_ransac(std::span<const PointPair> pairs,
                                        const RansacConfig& config = {});

}  // namespace spatialrl

#endif  // SPATIALRL_HOMOGRAPHY_HPP_
