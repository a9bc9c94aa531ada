#include "gazekit/eyeball.hpp"

#include "gazekit/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gazekit {

namespace {

Eigen::Matrix<double, 5, 1> ellipse_params(const Ellipse& e, Resolution r) {
  Eigen::Matrix<double, 5, 1> p;
  p << e.center.x() / r.width, e.center.y() / r.height, e.semi_major / r.width, e.semi_minor / r.height,
      e.angle / std::numbers::pi;
  return p;
}

double percentile_of(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace

std::vector<std::size_t> select_diverse_indices(std::span<const Ellipse> ellipses, Resolution resolution,
                                                std::size_t k) {
  const std::size_t n = ellipses.size();
  std::vector<std::size_t> chosen;
  if (n == 0 || k == 0) return chosen;
  if (n <= k) {
    for (std::size_t i = 0; i < n; ++i) chosen.push_back(i);
    return chosen;
  }

  std::vector<Eigen::Matrix<double, 5, 1>> params;
  params.reserve(n);
  Eigen::Matrix<double, 5, 1> mean = Eigen::Matrix<double, 5, 1>::Zero();
  for (const auto& e : ellipses) {
    params.push_back(ellipse_params(e, resolution));
    mean += params.back();
  }
  mean /= static_cast<double>(n);

  std::size_t seed = 0;
  double seed_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (params[i] - mean).squaredNorm();
    if (d < seed_dist) {
      seed_dist = d;
      seed = i;
    }
  }

  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(n, false);
  std::size_t current = seed;
  while (true) {
    chosen.push_back(current);
    taken[current] = true;
    if (chosen.size() == k) break;
    std::size_t next = n;
    double next_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      nearest[i] = std::min(nearest[i], (params[i] - params[current]).squaredNorm());
      if (nearest[i] > next_dist) {
        next_dist = nearest[i];
        next = i;
      }
    }
    current = next;
  }
  return chosen;
}

std::vector<Ellipse> select_diverse_ellipses(std::span<const Ellipse> ellipses, Resolution resolution, std::size_t k) {
  std::vector<Ellipse> out;
  for (auto i : select_diverse_indices(ellipses, resolution, k)) out.push_back(ellipses[i]);
  return out;
}

EyeballModel estimate_eyeball_geometric(std::span<const Ellipse> ellipses, const GeometricEyeballSettings& settings) {
  if (ellipses.size() < 5) throw Error(ErrorCode::IllConditioned, "need at least 5 ellipses");

  Eigen::Matrix2d system = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  std::size_t lines = 0;
  for (const auto& e : ellipses) {
    if (!(e.semi_major > 0.0) || e.semi_minor / e.semi_major > settings.max_axis_ratio) continue;
    const Point2 dir = e.minor_direction();
    const Eigen::Matrix2d proj = Eigen::Matrix2d::Identity() - dir * dir.transpose();
    system += proj;
    rhs += proj * e.center;
    ++lines;
  }
  if (lines < 2) throw Error(ErrorCode::IllConditioned, "too few elongated ellipses to locate the eyeball");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(system);
  if (!(eig.eigenvalues()[0] > settings.min_condition * eig.eigenvalues()[1])) {
    throw Error(ErrorCode::IllConditioned, "minor-axis lines are (nearly) parallel");
  }

  EyeballModel model;
  model.source = EyeballSource::Geometric;
  model.center = system.ldlt().solve(rhs);

  std::vector<double> distances;
  std::vector<double> foreshortened;
  for (const auto& e : ellipses) {
    const double d = (e.center - model.center).norm();
    distances.push_back(d);
    const double ratio = e.semi_minor / e.semi_major;
    if (e.semi_major > 0.0 && ratio <= settings.max_axis_ratio) {
      foreshortened.push_back(d / std::sqrt(1.0 - ratio * ratio));
    }
  }
  if (settings.radius_method == RadiusMethod::Foreshortening && foreshortened.size() >= 3) {
    model.radius = percentile_of(foreshortened, 0.5);
  } else {
    model.radius = percentile_of(distances, settings.percentile) / std::sin(settings.max_eccentric_angle_rad);
  }
  if (!(model.radius > 0.0) || !model.center.allFinite()) {
    throw Error(ErrorCode::IllConditioned, "degenerate eyeball estimate");
  }
  return model;
}

EyeballModel fallback_eyeball(Resolution resolution) {
  EyeballModel m;
  m.center = Point2(0.5 * resolution.width, 0.5 * resolution.height);
  m.radius = 0.25 * resolution.width;
  m.source = EyeballSource::Geometric;
  m.low_confidence = true;
  return m;
}

OpticalVector optical_vector(const EyeballModel& model, const Point2& feature_center, OpticalOrigin origin) {
  OpticalVector out;
  out.origin = origin;
  const double dx = feature_center.x() - model.center.x();
  const double dy = feature_center.y() - model.center.y();
  const double planar = dx * dx + dy * dy;
  const double r2 = model.radius * model.radius;
  out.outside_sphere = planar > r2;
  const double dz = std::sqrt(std::max(0.0, r2 - planar));
  const Eigen::Vector3d raw(dx, dy, dz);
  const double norm = raw.norm();
  out.v = norm > 0.0 ? Eigen::Vector3d(raw / norm) : Eigen::Vector3d(0.0, 0.0, 1.0);
  return out;
}

Eigen::VectorXd LearnedEyeballEstimator::input_vector(std::span<const Ellipse> ellipses) const {
  if (ellipses.empty()) throw Error(ErrorCode::DegenerateInput, "no ellipses for the eyeball network");
  // canonical order: polar angle of each centre around the mean centre
  Point2 mean(0.0, 0.0);
  for (const auto& e : ellipses) mean += e.center;
  mean /= static_cast<double>(ellipses.size());
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < ellipses.size(); ++i) {
    const Point2 d = ellipses[i].center - mean;
    order.emplace_back(std::atan2(d.y(), d.x()), i);
  }
  std::sort(order.begin(), order.end());

  Eigen::VectorXd x(static_cast<Eigen::Index>(kDiverseEllipseCount * 5));
  for (std::size_t i = 0; i < kDiverseEllipseCount; ++i) {
    const auto& e = ellipses[order[i % order.size()].second];
    // orientation as a doubled angle scaled by eccentricity: continuous across +-pi/2
    const double ecc = e.semi_major > 0.0 ? 1.0 - e.semi_minor / e.semi_major : 0.0;
    x.segment<5>(static_cast<Eigen::Index>(5 * i)) << e.center.x() / resolution_.width,
        e.center.y() / resolution_.height, e.semi_major / resolution_.width, ecc * std::cos(2.0 * e.angle),
        ecc * std::sin(2.0 * e.angle);
  }
  return x;
}

void LearnedEyeballEstimator::train(std::span<const EyeballTrainingPair> pairs, const MLPTrainSettings& settings) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyDataset, "no eyeball training pairs");
  const auto n = static_cast<Eigen::Index>(pairs.size());
  MLPDataset data;
  data.inputs.resize(n, static_cast<Eigen::Index>(kDiverseEllipseCount * 5));
  data.targets.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = pairs[static_cast<std::size_t>(i)];
    data.inputs.row(i) = input_vector(p.ellipses).transpose();
    data.targets.row(i) << p.truth.center.x() / resolution_.width, p.truth.center.y() / resolution_.height,
        p.truth.radius / resolution_.width;
  }
  const auto standardize = [](Eigen::MatrixXd& m, Eigen::VectorXd& mean, Eigen::VectorXd& scale) {
    mean = m.colwise().mean().transpose();
    scale.resize(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double var = (m.col(c).array() - mean[c]).square().mean();
      scale[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
      m.col(c) = (m.col(c).array() - mean[c]) / scale[c];
    }
  };
  standardize(data.inputs, input_mean_, input_scale_);
  standardize(data.targets, output_mean_, output_scale_);
  model_ = mlp_train({static_cast<int>(kDiverseEllipseCount * 5), kHiddenUnits, 3}, OutputActivation::Identity, data,
                     settings)
               .model;
}

EyeballModel LearnedEyeballEstimator::estimate(std::span<const Ellipse> ellipses) const {
  if (!model_) throw Error(ErrorCode::NotTrained, "learned eyeball estimator has not been trained");
  const Eigen::VectorXd x = (input_vector(ellipses) - input_mean_).cwiseQuotient(input_scale_);
  const Eigen::VectorXd y = mlp_eval(*model_, x).cwiseProduct(output_scale_) + output_mean_;
  EyeballModel m;
  m.source = EyeballSource::Learned;
  m.center = Point2(y[0] * resolution_.width, y[1] * resolution_.height);
  m.radius = y[2] * resolution_.width;
  if (!(m.radius > 0.0)) {
    m.radius = 0.25 * resolution_.width;
    m.low_confidence = true;
  }
  return m;
}

ModelBlock LearnedEyeballEstimator::to_block() const {
  if (!model_) throw Error(ErrorCode::NotTrained, "cannot serialize an untrained eyeball estimator");
  ModelBlock block("eyeball_mlp");
  block.set("eye_width", static_cast<long long>(resolution_.width));
  block.set("eye_height", static_cast<long long>(resolution_.height));
  block.set("input_mean", input_mean_);
  block.set("input_scale", input_scale_);
  block.set("output_mean", output_mean_);
  block.set("output_scale", output_scale_);
  mlp_to_block(*model_, block);
  return block;
}

LearnedEyeballEstimator LearnedEyeballEstimator::from_block(const ModelBlock& block) {
  if (block.type() != "eyeball_mlp") throw Error(ErrorCode::ModelFormat, "expected eyeball_mlp block");
  LearnedEyeballEstimator est(
      {static_cast<int>(block.get_int("eye_width")), static_cast<int>(block.get_int("eye_height"))});
  est.input_mean_ = block.get_reals("input_mean");
  est.input_scale_ = block.get_reals("input_scale");
  est.output_mean_ = block.get_reals("output_mean");
  est.output_scale_ = block.get_reals("output_scale");
  est.model_ = mlp_from_block(block);
  return est;
}

}  // namespace gazekit
