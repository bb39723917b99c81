#include "spatialrl/geometry.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spatialrl/errors.hpp"

namespace spatialrl {

namespace {

constexpr double kMinHomogeneous = 1e-12;

double cross(Point2 o, Point2 a, Point2 b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool segments_cross(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  const double d1 = cross(q1, q2, p1);
  const double d2 = cross(q1, q2, p2);
  const double d3 = cross(p1, p2, q1);
  const double d4 = cross(p1, p2, q2);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
         ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

// Convex counter-clockwise version of `quad`, substituting the hull for
// self-intersecting or (when `need_convex`) concave input.
std::vector<Point2> prepare(const Quadrilateral& quad, bool need_convex,
                            bool& fallback) {
  std::vector<Point2> poly(quad.corners.begin(), quad.corners.end());
  if (is_self_intersecting(quad) || (need_convex && !is_convex(poly))) {
    fallback = true;
    return convex_hull(poly);
  }
  if (signed_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());
  return poly;
}

}  // namespace

Homography::Homography(const Eigen::Matrix3d& m) : m_(m) {
  if (std::abs(m_(2, 2)) > 0.0) m_ /= m_(2, 2);
}

Homography Homography::translation(double tx, double ty) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return Homography(m);
}

bool Homography::is_invertible() const {
  if (!is_finite()) return false;
  const double scale = m_.cwiseAbs().maxCoeff();
  if (scale == 0.0) return false;
  return std::abs(m_.determinant()) > 1e-12 * scale * scale * scale;
}

Homography Homography::inverse() const {
  if (!is_invertible()) throw DegenerateProjection("homography is singular");
  return Homography(m_.inverse());
}

Point2 Homography::apply(Point2 p) const {
  const Eigen::Vector3d v = m_ * Eigen::Vector3d(p.x, p.y, 1.0);
  if (!(std::abs(v.z()) >= kMinHomogeneous)) {
    throw DegenerateProjection("point maps to infinity");
  }
  return {v.x() / v.z(), v.y() / v.z()};
}

Quadrilateral Quadrilateral::rectangle(double width, double height) {
  return {{{{0.0, 0.0}, {width, 0.0}, {width, height}, {0.0, height}}}};
}

Quadrilateral transform_corners(const Homography& m, const Quadrilateral& quad) {
  if (!m.is_invertible()) throw DegenerateProjection("homography is singular");
  Quadrilateral out;
  for (std::size_t i = 0; i < 4; ++i) out.corners[i] = m.apply(quad.corners[i]);
  return out;
}

double signed_area(std::span<const Point2> polygon) {
  double twice = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = polygon[i];
    const Point2& b = polygon[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

bool is_convex(std::span<const Point2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  int sign = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = cross(polygon[i], polygon[(i + 1) % n], polygon[(i + 2) % n]);
    if (c == 0.0) continue;
    const int s = c > 0 ? 1 : -1;
    if (sign == 0) {
      sign = s;
    } else if (s != sign) {
      return false;
    }
  }
  return sign != 0;
}

bool is_self_intersecting(const Quadrilateral& quad) {
  const auto& c = quad.corners;
  return segments_cross(c[0], c[1], c[2], c[3]) ||
         segments_cross(c[1], c[2], c[3], c[0]);
}

std::vector<Point2> convex_hull(std::span<const Point2> points) {
  std::vector<Point2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i > 0; --i) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

std::vector<Point2> clip_polygon(std::span<const Point2> subject,
                                 std::span<const Point2> clip) {
  std::vector<Point2> output(subject.begin(), subject.end());
  const std::size_t n = clip.size();
  for (std::size_t e = 0; e < n && !output.empty(); ++e) {
    const Point2 a = clip[e];
    const Point2 b = clip[(e + 1) % n];
    std::vector<Point2> input;
    input.swap(output);
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Point2 cur = input[i];
      const Point2 prev = input[(i + input.size() - 1) % input.size()];
      const double dc = cross(a, b, cur);
      const double dp = cross(a, b, prev);
      if (dc >= 0.0) {
        if (dp < 0.0) {
          const double t = dp / (dp - dc);
          output.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
        }
        output.push_back(cur);
      } else if (dp >= 0.0) {
        const double t = dp / (dp - dc);
        output.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
      }
    }
  }
  return output;
}

OverlapResult overlap_ratio(const Quadrilateral& frame_quad,
                            const Quadrilateral& transformed_quad,
                            double area_total) {
  if (!(area_total > 0.0)) throw std::invalid_argument("area_total must be positive");
  for (const auto* q : {&frame_quad, &transformed_quad}) {
    for (const auto& p : q->corners) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw std::invalid_argument("quadrilateral corners must be finite");
      }
    }
  }
  OverlapResult result;
  const auto clip = prepare(frame_quad, true, result.hull_fallback);
  const auto subject = prepare(transformed_quad, false, result.hull_fallback);
  if (clip.size() < 3 || subject.size() < 3) return result;
  const auto inter = clip_polygon(subject, clip);
  if (inter.size() < 3) return result;
  result.ratio = std::abs(signed_area(inter)) / area_total;
  return result;
}

}  // namespace spatialrl
