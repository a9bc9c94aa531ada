#include "gazekit/error.hpp"
#include "gazekit/geometry.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace gk = gazekit;
using gk::Point2;

namespace {

constexpr double kPi = std::numbers::pi;

double angle_diff(double a, double b) {
  double d = std::fmod(std::abs(a - b), kPi);
  return std::min(d, kPi - d);
}

std::vector<Point2> lid_points(double height, int n, double half_width = 50.0) {
  std::vector<Point2> pts;
  for (int i = 0; i < n; ++i) {
    const double x = -half_width + 2.0 * half_width * i / (n - 1);
    pts.emplace_back(x, height * (1.0 - (x / half_width) * (x / half_width)));
  }
  return pts;
}

std::vector<Point2> transformed(std::vector<Point2> pts, double angle, const Point2& shift) {
  const Eigen::Rotation2Dd rot(angle);
  for (auto& p : pts) p = rot * p + shift;
  return pts;
}

}  // namespace

TEST(FitEllipse, ExactPointsRecoverParameters) {
  const gk::Ellipse truth{{96.0, 96.0}, 30.0, 20.0, 0.3};
  const auto pts = gk::testing::ellipse_points(truth, 24);
  const auto e = gk::fit_ellipse(pts);
  EXPECT_NEAR(e.center.x(), 96.0, 1e-6);
  EXPECT_NEAR(e.center.y(), 96.0, 1e-6);
  EXPECT_NEAR(e.semi_major, 30.0, 1e-6);
  EXPECT_NEAR(e.semi_minor, 20.0, 1e-6);
  EXPECT_NEAR(angle_diff(e.angle, 0.3), 0.0, 1e-6);
}

TEST(FitEllipse, UniformNoiseCenterErrorPercentile) {
  const gk::Ellipse truth{{96.0, 96.0}, 30.0, 20.0, 0.3};
  const auto clean = gk::testing::ellipse_points(truth, 24);
  std::vector<double> errors;
  for (int seed = 0; seed < 1000; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    auto pts = clean;
    for (auto& p : pts) p += Point2(u(rng), u(rng));
    errors.push_back((gk::fit_ellipse(pts).center - truth.center).norm());
  }
  std::sort(errors.begin(), errors.end());
  EXPECT_LT(errors[949], 0.5);
}

TEST(FitEllipse, CollinearAndTooFewPointsAreDegenerate) {
  std::vector<Point2> line;
  for (int i = 0; i < 5; ++i) line.emplace_back(10.0 + i, 20.0 + 2.0 * i);
  try {
    gk::fit_ellipse(line);
    FAIL();
  } catch (const gk::Error& e) {
    EXPECT_EQ(e.code(), gk::ErrorCode::DegenerateInput);
  }
  const auto four = gk::testing::ellipse_points({{0.0, 0.0}, 3.0, 2.0, 0.0}, 4);
  EXPECT_THROW(gk::fit_ellipse(four), gk::Error);
}

TEST(FitEllipse, TranslationCovariance) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  auto pts = gk::testing::ellipse_points({{80.0, 70.0}, 25.0, 12.0, 2.2}, 30);
  for (auto& p : pts) p += Point2(u(rng), u(rng));
  const Point2 shift(37.5, -12.25);
  auto moved = pts;
  for (auto& p : moved) p += shift;
  const auto a = gk::fit_ellipse(pts);
  const auto b = gk::fit_ellipse(moved);
  EXPECT_NEAR((b.center - a.center - shift).norm(), 0.0, 1e-9);
  EXPECT_NEAR(b.semi_major, a.semi_major, 1e-9);
  EXPECT_NEAR(b.semi_minor, a.semi_minor, 1e-9);
  EXPECT_NEAR(angle_diff(b.angle, a.angle), 0.0, 1e-9);
}

TEST(FitEllipse, InvariantsHold) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ax(2.0, 40.0), ang(-4.0, 4.0), c(0.0, 192.0);
  for (int i = 0; i < 200; ++i) {
    const double a = ax(rng), b = ax(rng);
    const gk::Ellipse truth{{c(rng), c(rng)}, std::max(a, b), std::min(a, b), ang(rng)};
    const auto e = gk::fit_ellipse(gk::testing::ellipse_points(truth, 24));
    EXPECT_GE(e.semi_major, e.semi_minor);
    EXPECT_GT(e.semi_minor, 0.0);
    EXPECT_GE(e.angle, 0.0);
    EXPECT_LT(e.angle, kPi);
  }
}

TEST(EyelidSpline, InterpolatesControlPoints) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> jitter(-3.0, 3.0);
  std::vector<Point2> pts;
  for (int i = 0; i < 12; ++i) pts.emplace_back(10.0 * i + jitter(rng), 40.0 + jitter(rng) * 4.0);
  const gk::EyelidSpline s(pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_LT((s.evaluate(s.knots()[i]) - pts[i]).norm(), 1e-9);
  }
  EXPECT_DOUBLE_EQ(s.knots().front(), 0.0);
  EXPECT_DOUBLE_EQ(s.knots().back(), 1.0);
}

TEST(EyelidSpline, ParabolicLidWithinTolerance) {
  const auto pts = lid_points(8.0, 25);
  const gk::EyelidSpline s(pts);
  for (const auto& p : s.sample(100)) {
    const double expected = 8.0 * (1.0 - (p.x() / 50.0) * (p.x() / 50.0));
    EXPECT_NEAR(p.y(), expected, 0.05);
  }
}

TEST(EyelidSpline, ThreePointsAreDegenerate) {
  const std::vector<Point2> three{{0, 0}, {1, 1}, {2, 0}};
  try {
    gk::EyelidSpline s(three);
    FAIL();
  } catch (const gk::Error& e) {
    EXPECT_EQ(e.code(), gk::ErrorCode::DegenerateInput);
  }
  const auto four = lid_points(5.0, 4);
  EXPECT_THROW(gk::fit_eyelid_splines(four, three), gk::Error);
}

TEST(EyelidSpline, IdenticalLidsGiveZeroOpening) {
  std::vector<Point2> line;
  for (int i = 0; i < 10; ++i) line.emplace_back(10.0 * i, 50.0);
  const auto fit = gk::fit_eyelid_splines(line, line);
  for (double t = 0.0; t <= 1.0; t += 0.05) {
    EXPECT_LT((fit.upper.evaluate(t) - fit.lower.evaluate(t)).norm(), 1e-12);
  }
  EXPECT_NEAR(gk::compute_eye_opening(fit.upper, fit.lower, fit.corners), 0.0, 1e-9);
}

TEST(EyeOpening, ParallelLidsTenApart) {
  std::vector<Point2> up, low;
  for (int i = 0; i < 10; ++i) {
    up.emplace_back(20.0 + 10.0 * i, 40.0);
    low.emplace_back(20.0 + 10.0 * i, 50.0);
  }
  const auto fit = gk::fit_eyelid_splines(up, low);
  EXPECT_NEAR(fit.corners.corner_vector.x(), 1.0, 1e-12);
  EXPECT_NEAR(gk::compute_eye_opening(fit.upper, fit.lower, fit.corners), 10.0, 1e-9);
}

TEST(EyeOpening, RigidRotationInvariance) {
  std::vector<Point2> up, low;
  for (int i = 0; i < 10; ++i) {
    up.emplace_back(20.0 + 10.0 * i, 40.0);
    low.emplace_back(20.0 + 10.0 * i, 50.0);
  }
  const auto up_r = transformed(up, 0.7, {3.0, -4.0});
  const auto low_r = transformed(low, 0.7, {3.0, -4.0});
  const auto fit = gk::fit_eyelid_splines(up_r, low_r);
  EXPECT_NEAR(std::atan2(fit.corners.corner_vector.y(), fit.corners.corner_vector.x()), 0.7, 1e-12);
  EXPECT_NEAR(gk::compute_eye_opening(fit.upper, fit.lower, fit.corners), 10.0, 1e-6);
}

TEST(EyeOpening, ParabolicLidsMatchBruteForce) {
  const auto up = lid_points(-8.0, 21);
  const auto low = lid_points(8.0, 21);
  const auto fit = gk::fit_eyelid_splines(up, low);
  const double opening = gk::compute_eye_opening(fit.upper, fit.lower, fit.corners);
  const double oracle = gk::testing::brute_force_opening(fit.upper, fit.lower, fit.corners, 200, 20000);
  EXPECT_NEAR(opening, 16.0, 0.1);
  EXPECT_NEAR(opening, oracle, 0.1);
}

TEST(EyeOpening, SegmentPerpendicularToCornerVector) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> h(3.0, 15.0), ang(-kPi, kPi), sh(50.0, 140.0);
  for (int i = 0; i < 50; ++i) {
    const double angle = ang(rng);
    const Point2 shift(sh(rng), sh(rng));
    const auto fit = gk::fit_eyelid_splines(transformed(lid_points(-h(rng), 15), angle, shift),
                                            transformed(lid_points(h(rng), 15), angle, shift));
    const auto seg = gk::eye_opening_segment(fit.upper, fit.lower, fit.corners);
    ASSERT_TRUE(seg);
    const Point2 d = (seg->lower_point - seg->upper_point).normalized();
    EXPECT_LT(std::abs(d.dot(fit.corners.corner_vector)), 1e-9);
    EXPECT_NEAR(fit.corners.corner_vector.norm(), 1.0, 1e-12);
  }
}

TEST(EyeOpening, CrossedLidsWithoutIntersectionGiveZero) {
  std::vector<Point2> up, low;
  for (int i = 0; i < 6; ++i) {
    up.emplace_back(10.0 * i, 0.0);
    low.emplace_back(100.0 + 10.0 * i, 5.0);
  }
  const gk::EyelidSpline u(up), l(low);
  gk::EyeCorners corners;
  corners.corner_vector = {1.0, 0.0};
  EXPECT_FALSE(gk::eye_opening_segment(u, l, corners));
  EXPECT_EQ(gk::compute_eye_opening(u, l, corners), 0.0);
}

TEST(Marker, UnitSquare) {
  const std::vector<Point2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const auto m = gk::marker_from_landmarks(sq, 10, 2);
  EXPECT_TRUE(m.valid);
  EXPECT_EQ(m.center, Point2(0.5, 0.5));
  EXPECT_DOUBLE_EQ(m.area, 1.0);
  EXPECT_EQ(m.scene_frame_id, 2);
  std::vector<Point2> big;
  for (const auto& p : sq) big.push_back(p * 10.0);
  EXPECT_DOUBLE_EQ(gk::marker_from_landmarks(big, 0, 0).area, 100.0);
}

TEST(Marker, RegularPolygonArea) {
  const int n = 24;
  const double r = 50.0;
  std::vector<Point2> poly;
  for (int i = 0; i < n; ++i) poly.emplace_back(r * std::cos(2 * kPi * i / n), r * std::sin(2 * kPi * i / n));
  const double closed_form = 0.5 * n * r * r * std::sin(2 * kPi / n);
  const auto m = gk::marker_from_landmarks(poly, 0, 0);
  EXPECT_NEAR(m.area, closed_form, 0.01 * closed_form);
  EXPECT_NEAR(m.area, closed_form, 1e-9);
}

TEST(Marker, ShoelaceCyclicInvariance) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<Point2> poly;
  for (int i = 0; i < 9; ++i) poly.emplace_back(u(rng), u(rng));
  const double base = gk::polygon_area(poly);
  for (std::size_t s = 1; s < poly.size(); ++s) {
    auto rotated = poly;
    std::rotate(rotated.begin(), rotated.begin() + static_cast<long>(s), rotated.end());
    EXPECT_NEAR(gk::polygon_area(rotated), base, 1e-9);
  }
}

TEST(Marker, DegenerateInputIsInvalid) {
  const std::vector<Point2> two{{0, 0}, {1, 1}};
  EXPECT_FALSE(gk::marker_from_landmarks(two, 0, 0).valid);
  const std::vector<Point2> line{{0, 0}, {1, 1}, {2, 2}};
  EXPECT_FALSE(gk::marker_from_landmarks(line, 0, 0).valid);
}

TEST(Marker, ValidCenterInsideBoundingBox) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 500.0);
  for (int k = 0; k < 100; ++k) {
    std::vector<Point2> poly;
    for (int i = 0; i < 6; ++i) poly.emplace_back(u(rng), u(rng));
    const auto m = gk::marker_from_landmarks(poly, 0, 0);
    if (!m.valid) continue;
    EXPECT_GT(m.area, 0.0);
    double xmin = 1e9, xmax = -1e9, ymin = 1e9, ymax = -1e9;
    for (const auto& p : poly) {
      xmin = std::min(xmin, p.x());
      xmax = std::max(xmax, p.x());
      ymin = std::min(ymin, p.y());
      ymax = std::max(ymax, p.y());
    }
    EXPECT_GE(m.center.x(), xmin);
    EXPECT_LE(m.center.x(), xmax);
    EXPECT_GE(m.center.y(), ymin);
    EXPECT_LE(m.center.y(), ymax);
  }
}
