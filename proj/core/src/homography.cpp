#include "spatialrl/homography.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "spatialrl/errors.hpp"

namespace spatialrl {

namespace {

// Similarity taking the centroid to the origin and the mean distance to
// sqrt(2).
Eigen::Matrix3d normalizer(std::span<const PointPair> pairs, bool use_src) {
  double cx = 0.0, cy = 0.0;
  for (const auto& p : pairs) {
    const Point2& q = use_src ? p.src : p.dst;
    cx += q.x;
    cy += q.y;
  }
  const double n = static_cast<double>(pairs.size());
  cx /= n;
  cy /= n;
  double mean_dist = 0.0;
  for (const auto& p : pairs) {
    const Point2& q = use_src ? p.src : p.dst;
    mean_dist += std::hypot(q.x - cx, q.y - cy);
  }
  mean_dist /= n;
  const double s = mean_dist > 0.0 ? std::sqrt(2.0) / mean_dist : 1.0;
  Eigen::Matrix3d t;
  t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
  return t;
}

std::size_t count_inliers(const Homography& h, std::span<const PointPair> pairs,
                          double threshold, std::vector<std::uint8_t>* mask) {
  std::size_t count = 0;
  if (mask) mask->assign(pairs.size(), 0);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (reprojection_error(h, pairs[i]) <= threshold) {
      ++count;
      if (mask) (*mask)[i] = 1;
    }
  }
  return count;
}

int required_iterations(double inlier_fraction, double confidence, int cap) {
  const double w4 = std::pow(inlier_fraction, 4);
  if (w4 >= 1.0) return 1;
  if (w4 <= 0.0) return cap;
  const double n = std::log(1.0 - confidence) / std::log(1.0 - w4);
  if (!std::isfinite(n) || n >= cap) return cap;
  return std::max(1, static_cast<int>(std::ceil(n)));
}

}  // namespace

std::optional<Homography> fit_homography(std::span<const PointPair> pairs) {
  if (pairs.size() < 4) return std::nullopt;
  const Eigen::Matrix3d ts = normalizer(pairs, true);
  const Eigen::Matrix3d td = normalizer(pairs, false);
  Eigen::MatrixXd a(2 * pairs.size(), 9);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Eigen::Vector3d s = ts * Eigen::Vector3d(pairs[i].src.x, pairs[i].src.y, 1.0);
    const Eigen::Vector3d d = td * Eigen::Vector3d(pairs[i].dst.x, pairs[i].dst.y, 1.0);
    const double x = s.x(), y = s.y(), u = d.x(), v = d.y();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d m = td.inverse() * hn * ts;
  if (!m.allFinite() || std::abs(m(2, 2)) < 1e-15) return std::nullopt;
  Homography out(m);
  if (!out.is_invertible()) return std::nullopt;
  return out;
}

double reprojection_error(const Homography& model, const PointPair& pair) {
  const Eigen::Vector3d v =
      model.matrix() * Eigen::Vector3d(pair.src.x, pair.src.y, 1.0);
  if (!(std::abs(v.z()) >= 1e-12)) return std::numeric_limits<double>::infinity();
  return std::hypot(v.x() / v.z() - pair.dst.x, v.y() / v.z() - pair.dst.y);
}

bool has_collinear_triple(const std::array<Point2, 4>& pts) {
  double scale = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      scale = std::max(scale, std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y));
    }
  }
  if (scale == 0.0) return true;
  constexpr int kTriples[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  for (const auto& t : kTriples) {
    const Point2 a = pts[t[0]], b = pts[t[1]], c = pts[t[2]];
    const double twice_area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if (std::abs(twice_area) <= 1e-6 * scale * scale) return true;
  }
  return false;
}

RansacResult estimate_homography_ransac(std::span<const PointPair> pairs,
                                        const RansacConfig& config) {
  if (pairs.size() < 4) {
    throw InsufficientMatches("homography needs at least 4 correspondences, got " +
                              std::to_string(pairs.size()));
  }
  if (!(config.reprojection_threshold > 0.0) || config.max_iterations <= 0 ||
      !(config.confidence > 0.0 && config.confidence < 1.0)) {
    throw std::invalid_argument("invalid RANSAC configuration");
  }
  const std::size_t n = pairs.size();
  std::mt19937_64 rng(config.seed);

  std::optional<Homography> best;
  std::size_t best_count = 0;
  int needed = config.max_iterations;
  int iter = 0;
  std::array<std::size_t, 4> idx{};
  std::array<PointPair, 4> sample{};
  for (; iter < needed; ++iter) {
    for (std::size_t k = 0; k < 4; ++k) {
      bool fresh;
      do {
        idx[k] = static_cast<std::size_t>(rng() % n);
        fresh = true;
        for (std::size_t j = 0; j < k; ++j) fresh = fresh && idx[j] != idx[k];
      } while (!fresh);
      sample[k] = pairs[idx[k]];
    }
    const std::array<Point2, 4> src{sample[0].src, sample[1].src, sample[2].src, sample[3].src};
    const std::array<Point2, 4> dst{sample[0].dst, sample[1].dst, sample[2].dst, sample[3].dst};
    if (has_collinear_triple(src) || has_collinear_triple(dst)) continue;
    const auto model = fit_homography(sample);
    if (!model) continue;
    const std::size_t count = count_inliers(*model, pairs, config.reprojection_threshold, nullptr);
    if (count > best_count) {
      best_count = count;
      best = model;
      needed = std::min(needed, required_iterations(static_cast<double>(count) / n,
                                                    config.confidence, config.max_iterations));
    }
  }
  if (!best || best_count < 4) {
    throw EstimationFailed("no non-degenerate homography with 4 or more inliers");
  }

  RansacResult result;
  result.iterations = iter;
  result.model = *best;
  result.inlier_count = count_inliers(*best, pairs, config.reprojection_threshold,
                                      &result.inlier_mask);
  // Least-squares refinement over the consensus set, kept while it does not
  // lose inliers.
  for (int round = 0; round < 5; ++round) {
    std::vector<PointPair> inliers;
    inliers.reserve(result.inlier_count);
    for (std::size_t i = 0; i < n; ++i) {
      if (result.inlier_mask[i]) inliers.push_back(pairs[i]);
    }
    const auto refined = fit_homography(inliers);
    if (!refined) break;
    std::vector<std::uint8_t> mask;
    const std::size_t count =
        count_inliers(*refined, pairs, config.reprojection_threshold, &mask);
    if (count < result.inlier_count) break;
    const bool same = mask == result.inlier_mask;
    result.model = *refined;
    result.inlier_mask = std::move(mask);
    result.inlier_count = count;
    if (same) break;
  }
  return result;
}

}  // namespace spatialrl
