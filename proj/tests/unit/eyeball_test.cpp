#include "gazekit/error.hpp"
#include "gazekit/eyeball.hpp"
#include "gazekit/synth.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace gk = gazekit;
using gk::Point2;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::vector<gk::Ellipse> grid_ellipses(const gk::SyntheticEye& eye, double rho = 8.0) {
  std::vector<gk::Ellipse> out;
  for (int i = -2; i <= 2; ++i) {
    for (int j = -2; j <= 2; ++j) {
      const double yaw = 15.0 * i * kDeg, pitch = 15.0 * j * kDeg;
      const double gx = std::sin(yaw) * std::cos(pitch), gy = std::sin(pitch);
      out.push_back(gk::projected_disc(eye, rho, gx, gy));
    }
  }
  return out;
}

/// Ellipse whose minor axis lies on the line through `through` with direction angle `dir`.
gk::Ellipse on_line(const Point2& through, double dir, double offset, double ratio) {
  gk::Ellipse e;
  e.center = through + offset * Point2(std::cos(dir), std::sin(dir));
  e.semi_major = 8.0;
  e.semi_minor = 8.0 * ratio;
  e.angle = std::fmod(dir + std::numbers::pi / 2.0, std::numbers::pi);
  return e;
}

double param_distance(const gk::Ellipse& a, const gk::Ellipse& b, gk::Resolution res) {
  const auto vec = [&](const gk::Ellipse& e) {
    Eigen::Matrix<double, 5, 1> v;
    v << e.center.x() / res.width, e.center.y() / res.height, e.semi_major / res.width, e.semi_minor / res.height,
        e.angle / std::numbers::pi;
    return v;
  };
  return (vec(a) - vec(b)).norm();
}

double min_pairwise(const std::vector<gk::Ellipse>& set, gk::Resolution res) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = i + 1; j < set.size(); ++j) best = std::min(best, param_distance(set[i], set[j], res));
  }
  return best;
}

gk::ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const gk::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return gk::ErrorCode::IoFailure;
}

}  // namespace

TEST(DiverseSelection, FewerThanKReturnsAll) {
  const std::vector<gk::Ellipse> three{{{10, 10}, 5, 4, 0.1}, {{20, 10}, 5, 4, 0.2}, {{30, 10}, 5, 3, 0.3}};
  const auto idx = gk::select_diverse_indices(three, {192, 192});
  EXPECT_EQ(idx, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(DiverseSelection, IdenticalEllipses) {
  const std::vector<gk::Ellipse> same(200, gk::Ellipse{{50, 60}, 9, 7, 0.4});
  const auto out = gk::select_diverse_ellipses(same, {192, 192});
  ASSERT_EQ(out.size(), 100u);
  for (const auto& e : out) {
    EXPECT_EQ(e.center, same[0].center);
    EXPECT_EQ(e.angle, same[0].angle);
  }
}

TEST(DiverseSelection, LineBeatsRandomSubsets) {
  const gk::Resolution res{192, 192};
  std::vector<gk::Ellipse> line;
  for (int i = 0; i < 200; ++i) line.push_back({{10.0 + 0.8 * i, 40.0 + 0.5 * i}, 10.0, 6.0, 0.5});
  const auto chosen = gk::select_diverse_ellipses(line, res);
  ASSERT_EQ(chosen.size(), 100u);
  const double greedy = min_pairwise(chosen, res);
  std::mt19937_64 rng(17);
  std::vector<std::size_t> order(line.size());
  for (int trial = 0; trial < 1000; ++trial) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<gk::Ellipse> subset;
    for (std::size_t i = 0; i < 100; ++i) subset.push_back(line[order[i]]);
    ASSERT_GE(greedy, min_pairwise(subset, res));
  }
}

TEST(DiverseSelection, Idempotent) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> c(20, 170), ax(3, 12), ang(0, 3);
  std::vector<gk::Ellipse> many;
  for (int i = 0; i < 300; ++i) many.push_back({{c(rng), c(rng)}, ax(rng) + 3, ax(rng), ang(rng)});
  const auto once = gk::select_diverse_ellipses(many, {192, 192});
  const auto twice = gk::select_diverse_ellipses(once, {192, 192});
  ASSERT_EQ(once.size(), twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(once[i].center, twice[i].center);
}

TEST(GeometricEyeball, SphereGridRecovery) {
  const gk::SyntheticEye eye{{96.0, 96.0}, 60.0};
  const auto model = gk::estimate_eyeball_geometric(grid_ellipses(eye));
  EXPECT_LT((model.center - eye.center).norm(), 1.0);
  EXPECT_LT(std::abs(model.radius - 60.0) / 60.0, 0.05);
  EXPECT_FALSE(model.low_confidence);
}

TEST(GeometricEyeball, PercentileRadiusMethod) {
  const gk::SyntheticEye eye{{96.0, 96.0}, 60.0};
  std::vector<gk::Ellipse> ellipses;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (ellipses.size() < 400) {
    const double gx = u(rng), gy = u(rng);
    if (gx * gx + gy * gy > std::pow(std::sin(50.0 * kDeg), 2)) continue;
    ellipses.push_back(gk::projected_disc(eye, 8.0, gx, gy));
  }
  gk::GeometricEyeballSettings settings;
  settings.radius_method = gk::RadiusMethod::Percentile;
  const auto model = gk::estimate_eyeball_geometric(ellipses, settings);
  EXPECT_LT((model.center - eye.center).norm(), 1.0);
  EXPECT_LT(std::abs(model.radius - 60.0) / 60.0, 0.05);
}

TEST(GeometricEyeball, ConcentricCirclesAreIllConditioned) {
  std::vector<gk::Ellipse> circles;
  for (int i = 0; i < 10; ++i) circles.push_back({{96, 96}, 5.0 + i, 5.0 + i, 0.0});
  EXPECT_EQ(code_of([&] { gk::estimate_eyeball_geometric(circles); }), gk::ErrorCode::IllConditioned);
}

TEST(GeometricEyeball, ParallelLinesAreIllConditioned) {
  std::vector<gk::Ellipse> ellipses;
  for (int i = 0; i < 10; ++i) ellipses.push_back(on_line({100, 90}, 0.3, 5.0 * i - 20.0, 0.6));
  EXPECT_EQ(code_of([&] { gk::estimate_eyeball_geometric(ellipses); }), gk::ErrorCode::IllConditioned);
}

TEST(GeometricEyeball, TwoPencilIntersection) {
  std::vector<gk::Ellipse> ellipses;
  for (int i = 1; i <= 6; ++i) ellipses.push_back(on_line({100, 90}, 0.4, 4.0 * i, 0.7));
  for (int i = 1; i <= 6; ++i) ellipses.push_back(on_line({100, 90}, 1.9, -5.0 * i, 0.5));
  const auto model = gk::estimate_eyeball_geometric(ellipses);
  EXPECT_NEAR(model.center.x(), 100.0, 1e-6);
  EXPECT_NEAR(model.center.y(), 90.0, 1e-6);
}

TEST(GeometricEyeball, TranslationEquivariance) {
  const auto base = grid_ellipses({{90.0, 100.0}, 55.0});
  const Point2 shift(7.25, -3.5);
  auto moved = base;
  for (auto& e : moved) e.center += shift;
  const auto a = gk::estimate_eyeball_geometric(base);
  const auto b = gk::estimate_eyeball_geometric(moved);
  EXPECT_NEAR((b.center - a.center - shift).norm(), 0.0, 1e-6);
  EXPECT_NEAR(b.radius, a.radius, 1e-6);
}

TEST(GeometricEyeball, FallbackModel) {
  const auto m = gk::fallback_eyeball({192, 192});
  EXPECT_EQ(m.center, Point2(96, 96));
  EXPECT_EQ(m.radius, 48.0);
  EXPECT_TRUE(m.low_confidence);
}

TEST(OpticalVector, EquatorTriangle) {
  const gk::EyeballModel m{{100, 100}, 10.0};
  const auto v = gk::optical_vector(m, {106, 108});
  EXPECT_NEAR(v.v.x(), 0.6, 1e-12);
  EXPECT_NEAR(v.v.y(), 0.8, 1e-12);
  EXPECT_NEAR(v.v.z(), 0.0, 1e-12);
  EXPECT_FALSE(v.outside_sphere);
}

TEST(OpticalVector, StraightAhead) {
  const gk::EyeballModel m{{100, 100}, 10.0};
  const auto v = gk::optical_vector(m, {100, 100});
  EXPECT_EQ(v.v, Eigen::Vector3d(0, 0, 1));
}

TEST(OpticalVector, OutsideSphereIsClamped) {
  const gk::EyeballModel m{{100, 100}, 10.0};
  const auto v = gk::optical_vector(m, {115, 100}, gk::OpticalOrigin::IrisCenter);
  EXPECT_TRUE(v.outside_sphere);
  EXPECT_NEAR((v.v - Eigen::Vector3d(1, 0, 0)).norm(), 0.0, 1e-12);
  EXPECT_EQ(v.origin, gk::OpticalOrigin::IrisCenter);
}

TEST(OpticalVector, AlwaysUnitWithNonNegativeZ) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 192.0), r(1.0, 80.0);
  for (int i = 0; i < 10000; ++i) {
    const gk::EyeballModel m{{u(rng), u(rng)}, r(rng)};
    const auto v = gk::optical_vector(m, {u(rng), u(rng)});
    EXPECT_NEAR(v.v.norm(), 1.0, 1e-9);
    EXPECT_GE(v.v.z(), 0.0);
  }
}

TEST(LearnedEyeball, NotTrainedBeforeTraining) {
  const gk::LearnedEyeballEstimator est;
  const auto ellipses = grid_ellipses({{96, 96}, 60});
  EXPECT_FALSE(est.trained());
  EXPECT_EQ(code_of([&] { est.estimate(ellipses); }), gk::ErrorCode::NotTrained);
}

TEST(LearnedEyeball, TrainsDeterministicallyAndGeneralises) {
  const gk::Resolution res{192, 192};
  const auto train = gk::make_eyeball_training_set(1500, res, 1);
  const auto held_out = gk::make_eyeball_training_set(200, res, 2);
  gk::MLPTrainSettings settings;
  settings.epochs_per_stage = 300;
  settings.restarts = 1;
  settings.seed = 4;
  gk::LearnedEyeballEstimator a(res), b(res);
  a.train(train, settings);
  b.train(train, settings);
  ASSERT_TRUE(a.trained());
  std::vector<double> errors;
  for (const auto& pair : held_out) {
    const auto ma = a.estimate(pair.ellipses);
    const auto mb = b.estimate(pair.ellipses);
    EXPECT_EQ(ma.center, mb.center);
    EXPECT_EQ(ma.radius, mb.radius);
    EXPECT_EQ(a.estimate(pair.ellipses).center, ma.center);
    EXPECT_EQ(ma.source, gk::EyeballSource::Learned);
    errors.push_back((ma.center - pair.truth.center).norm());
  }
  std::nth_element(errors.begin(), errors.begin() + errors.size() / 2, errors.end());
  EXPECT_LT(errors[errors.size() / 2], 3.0);

  const auto restored = gk::LearnedEyeballEstimator::from_block(a.to_block());
  const auto m0 = a.estimate(held_out[0].ellipses);
  const auto m1 = restored.estimate(held_out[0].ellipses);
  EXPECT_NEAR((m0.center - m1.center).norm(), 0.0, 1e-9);
}
