#ifndef SPATIALRL_GEOMETRY_HPP_
#define SPATIALRL_GEOMETRY_HPP_

#include <Eigen/Core>
#include <array>
#include <span>
#include <vector>

namespace spatialrl {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

// 3x3 projective transform. Stored normalized so m(2,2) == 1 whenever the
// bottom-right entry is nonzero.
class Homography {
 public:
  Homography() : m_(Eigen::Matrix3d::Identity()) {}
  explicit Homography(const Eigen::Matrix3d& m);

  static Homography identity() { return Homography(); }
  static Homography translation(double tx, double ty);

  const Eigen::Matrix3d& matrix() const noexcept { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

  bool is_finite() const { return m_.allFinite(); }
  bool is_invertible() const;
  // Throws DegenerateProjection when the matrix is singular.
  Homography inverse() const;
  // Throws DegenerateProjection when |w'| < 1e-12.
  Point2 apply(Point2 p) const;

 private:
  Eigen::Matrix3d m_;
};

// Four corners in order. The frame rectangle is
// {(0,0), (w,0), (w,h), (0,h)}.
struct Quadrilateral {
  std::array<Point2, 4> corners{};

  static Quadrilateral rectangle(double width, double height);
  bool operator==(const Quadrilateral&) const = default;
};

// Maps every corner through m with homogeneous normalization. Throws
// DegenerateProjection when m is singular or a corner lands at infinity.
Quadrilateral transform_corners(const Homography& m, const Quadrilateral& quad);

struct OverlapResult {
  double ratio = 0.0;
  // Set when an input was self-intersecting or its clip polygon was
  // not convex, and a convex hull was substituted.
  bool hull_fallback = false;
};

// Area(frame_quad ∩ transformed_quad) / area_total, by Sutherland-Hodgman
// clipping against frame_quad and the shoelace formula.
OverlapResult overlap_ratio(const Quadrilateral& frame_quad,
                            const Quadrilateral& transformed_quad,
                            double area_total);

// Polygon helpers shared by the overlap computation and its tests.
double signed_area(std::span<const Point2> polygon);
bool is_convex(std::span<const Point2> polygon);
bool is_self_intersecting(const Quadrilateral& quad);
std::vector<Point2> convex_hull(std::span<const Point2> points);
// `clip` must be convex and counter-clockwise.
std::vector<Point2> clip_polygon(std::span<const Point2> subject,
                                 std::span<const Point2> clip);

}  // namespace spatialrl

#endif  // SPATIALRL_GEOMETRY_HPP_
