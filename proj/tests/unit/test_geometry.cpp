#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spatialrl/errors.hpp"
#include "spatialrl/geometry.hpp"

using namespace spatialrl;

namespace {

std::vector<Point2> as_polygon(const Quadrilateral& q) {
  return {q.corners.begin(), q.corners.end()};
}

const Quadrilateral kFrame = Quadrilateral::rectangle(100, 100);

}  // namespace

TEST(Homography, NormalizesScale) {
  Eigen::Matrix3d m;
  m << 2, 0, 4, 0, 2, 6, 0, 0, 2;
  const Homography h(m);
  EXPECT_DOUBLE_EQ(h(2, 2), 1.0);
  const Point2 p = h.apply({1, 1});
  EXPECT_DOUBLE_EQ(p.x, 3.0);
  EXPECT_DOUBLE_EQ(p.y, 4.0);
}

TEST(Homography, InverseRoundTrips) {
  Eigen::Matrix3d m;
  m << 1.1, 0.05, 3, -0.02, 0.95, -7, 1e-4, -2e-4, 1;
  const Homography h(m);
  const Homography inv = h.inverse();
  for (const Point2 p : {Point2{0, 0}, Point2{50, 20}, Point2{-10, 80}}) {
    const Point2 q = inv.apply(h.apply(p));
    EXPECT_NEAR(q.x, p.x, 1e-9);
    EXPECT_NEAR(q.y, p.y, 1e-9);
  }
}

TEST(Homography, SingularMatrixIsNotInvertible) {
  Eigen::Matrix3d m;
  m << 1, 2, 3, 2, 4, 6, 0, 0, 1;
  const Homography h(m);
  EXPECT_FALSE(h.is_invertible());
  EXPECT_THROW(h.inverse(), DegenerateProjection);
  EXPECT_THROW(transform_corners(h, kFrame), DegenerateProjection);
}

TEST(Homography, PointAtInfinityThrows) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(2, 0) = -0.01;  // w = 1 - 0.01 x vanishes at x = 100
  EXPECT_THROW(Homography(m).apply({100, 0}), DegenerateProjection);
  EXPECT_THROW(transform_corners(Homography(m), kFrame), DegenerateProjection);
}

TEST(Overlap, IdentityIsOne) {
  const auto r = overlap_ratio(kFrame, transform_corners(Homography::identity(), kFrame), 1e4);
  EXPECT_DOUBLE_EQ(r.ratio, 1.0);
  EXPECT_FALSE(r.hull_fallback);
}

TEST(Overlap, HalfWidthTranslationIsHalf) {
  for (double w : {100.0, 640.0, 333.0}) {
    const Quadrilateral frame = Quadrilateral::rectangle(w, 0.75 * w);
    const auto moved = transform_corners(Homography::translation(w / 2, 0), frame);
    EXPECT_NEAR(overlap_ratio(frame, moved, w * 0.75 * w).ratio, 0.5, 1e-9);
  }
}

TEST(Overlap, DisjointIsZero) {
  const auto moved = transform_corners(Homography::translation(150, 0), kFrame);
  EXPECT_EQ(overlap_ratio(kFrame, moved, 1e4).ratio, 0.0);
  const auto touching = transform_corners(Homography::translation(100, 0), kFrame);
  EXPECT_NEAR(overlap_ratio(kFrame, touching, 1e4).ratio, 0.0, 1e-12);
}

TEST(Overlap, ContainedQuadGivesItsAreaFraction) {
  Quadrilateral q{{Point2{10, 10}, Point2{30, 10}, Point2{30, 50}, Point2{10, 50}}};
  EXPECT_NEAR(overlap_ratio(kFrame, q, 1e4).ratio, 800.0 / 1e4, 1e-12);
}

TEST(Overlap, OrientationDoesNotMatter) {
  Quadrilateral cw{{Point2{10, 10}, Point2{10, 50}, Point2{30, 50}, Point2{30, 10}}};
  EXPECT_NEAR(overlap_ratio(kFrame, cw, 1e4).ratio, 800.0 / 1e4, 1e-12);
}

TEST(Overlap, ScaledUpViewCoversFrame) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 0) = m(1, 1) = 2.0;
  m(0, 2) = m(1, 2) = -50.0;
  EXPECT_NEAR(overlap_ratio(kFrame, transform_corners(Homography(m), kFrame), 1e4).ratio, 1.0,
              1e-12);
}

TEST(Overlap, SelfIntersectingQuadFallsBackToHull) {
  // Bow-tie: corners 2 and 3 swapped.
  Quadrilateral bow{{Point2{0, 0}, Point2{100, 0}, Point2{0, 100}, Point2{100, 100}}};
  ASSERT_TRUE(is_self_intersecting(bow));
  const auto r = overlap_ratio(kFrame, bow, 1e4);
  EXPECT_TRUE(r.hull_fallback);
  EXPECT_NEAR(r.ratio, 1.0, 1e-12);
}

TEST(Overlap, ConcaveSubjectMatchesMonteCarlo) {
  Quadrilateral dart{{Point2{-20, -20}, Point2{80, 30}, Point2{140, 140}, Point2{30, 80}}};
  ASSERT_FALSE(is_self_intersecting(dart));
  const double mc = oracle::mc_intersection_area(as_polygon(kFrame), as_polygon(dart), 600, 1);
  EXPECT_NEAR(overlap_ratio(kFrame, dart, 1e4).ratio, mc / 1e4, 1e-3);
}

TEST(Overlap, RandomConvexQuadsMatchMonteCarlo) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> c(-20.0, 120.0);
  for (int i = 0; i < 100; ++i) {
    const Quadrilateral q = oracle::random_convex_quad(rng, c(rng), c(rng), 80.0);
    const double mc = oracle::mc_intersection_area(as_polygon(kFrame), as_polygon(q), 300, i);
    const auto r = overlap_ratio(kFrame, q, 1e4);
    EXPECT_FALSE(r.hull_fallback);
    EXPECT_NEAR(r.ratio, mc / 1e4, 1e-3) << "quad " << i;
  }
}

TEST(Overlap, RejectsBadInput) {
  EXPECT_THROW(overlap_ratio(kFrame, kFrame, 0.0), std::invalid_argument);
  Quadrilateral nan = kFrame;
  nan.corners[1].x = std::nan("");
  EXPECT_THROW(overlap_ratio(kFrame, nan, 1.0), std::invalid_argument);
}

TEST(Polygon, ShoelaceArea) {
  const std::vector<Point2> tri = {{0, 0}, {4, 0}, {0, 3}};
  EXPECT_DOUBLE_EQ(signed_area(tri), 6.0);
  const std::vector<Point2> rev = {{0, 0}, {0, 3}, {4, 0}};
  EXPECT_DOUBLE_EQ(signed_area(rev), -6.0);
}

TEST(Polygon, Convexity) {
  const std::vector<Point2> square = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const std::vector<Point2> dart = {{0, 0}, {2, 1}, {4, 0}, {2, 4}};
  EXPECT_TRUE(is_convex(square));
  EXPECT_FALSE(is_convex(dart));
}

TEST(Polygon, ConvexHullDropsInteriorPoints) {
  const std::vector<Point2> pts = {{0, 0}, {2, 0}, {1, 1}, {2, 2}, {0, 2}, {1, 0}};
  const auto hull = convex_hull(pts);
  EXPECT_EQ(hull.size(), 4u);
  EXPECT_DOUBLE_EQ(std::abs(signed_area(hull)), 4.0);
}

TEST(Polygon, ClipTriangleByBox) {
  const std::vector<Point2> box = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const std::vector<Point2> tri = {{-1, 0}, {2, 0}, {0.5, 3}};
  const auto inter = clip_polygon(tri, box);
  const double mc = oracle::mc_intersection_area(box, tri, 500, 3);
  EXPECT_NEAR(std::abs(signed_area(inter)), mc, 2e-3);
}
