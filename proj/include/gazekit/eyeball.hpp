#pragma once

#include "gazekit/geometry.hpp"
#include "gazekit/mlp.hpp"
#include "gazekit/model_io.hpp"
#include "gazekit/recording.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace gazekit {

enum class EyeballSource { Geometric, Learned };

struct EyeballModel {
  Point2 center{0.0, 0.0};  // eye-image pixels
  double radius = 0.0;      // pixels
  EyeballSource source = EyeballSource::Geometric;
  bool low_confidence = false;
};

enum class OpticalOrigin { PupilCenter, IrisCenter };

struct OpticalVector {
  OpticalOrigin origin = OpticalOrigin::PupilCenter;
  Eigen::Vector3d v{0.0, 0.0, 1.0};
  bool outside_sphere = false;
};

inline constexpr std::size_t kDiverseEllipseCount = 100;

/// Greedy farthest-point selection of min(k, N) ellipses in normalised
/// parameter space (centre / resolution, axes / resolution, angle / pi),
/// seeded at the ellipse closest to the parameter-space centroid. Returns
/// indices into `ellipses` in selection order; N <= k returns 0..N-1.
std::vector<std::size_t> select_diverse_indices(std::span<const Ellipse> ellipses, Resolution resolution,
                                                std::size_t k = kDiverseEllipseCount);
std::vector<Ellipse> select_diverse_ellipses(std::span<const Ellipse> ellipses, Resolution resolution,
                                             std::size_t k = kDiverseEllipseCount);

enum class RadiusMethod {
  /// Median over eccentric ellipses of d / sqrt(1 - (minor/major)^2).
  Foreshortening,
  /// Percentile of centre distances divided by sin(max eccentric angle).
  Percentile,
};

struct GeometricEyeballSettings {
  RadiusMethod radius_method = RadiusMethod::Foreshortening;
  double percentile = 0.95;
  double max_eccentric_angle_rad = 50.0 * std::numbers::pi / 180.0;
  double max_axis_ratio = 0.98;       // ellipses rounder than this carry no radius information
  double min_condition = 1e-4;        // smallest/largest eigenvalue of the line system
};

/// Least-squares intersection of the ellipses' minor-axis lines. Throws
/// IllConditioned for fewer than five usable ellipses or near-parallel lines.
EyeballModel estimate_eyeball_geometric(std::span<const Ellipse> ellipses, const GeometricEyeballSettings& settings = {});

/// Image centre with radius = width / 4, flagged low-confidence.
EyeballModel fallback_eyeball(Resolution resolution);

/// dz = sqrt(max(0, r^2 - dx^2 - dy^2)); outside_sphere marks the clamped case.
OpticalVector optical_vector(const EyeballModel& model, const Point2& feature_center,
                             OpticalOrigin origin = OpticalOrigin::PupilCenter);

struct EyeballTrainingPair {
  std::vector<Ellipse> ellipses;  // already a diverse subset
  EyeballModel truth;
};

/// Single hidden layer (100 rectifier units) regressor from 100 flattened,
/// resolution-normalised ellipses to (centre, radius).
class LearnedEyeballEstimator {
 public:
  static constexpr int kHiddenUnits = 100;

  explicit LearnedEyeballEstimator(Resolution resolution = {192, 192}) : resolution_(resolution) {}

  void train(std::span<const EyeballTrainingPair> pairs, const MLPTrainSettings& settings);
  bool trained() const { return model_.has_value(); }
  /// Throws NotTrained.
  EyeballModel estimate(std::span<const Ellipse> ellipses) const;

  /// Flattened input: subset padded (by repetition) or truncated to 100.
  Eigen::VectorXd input_vector(std::span<const Ellipse> ellipses) const;

  ModelBlock to_block() const;
  static LearnedEyeballEstimator from_block(const ModelBlock& block);

 private:
  Resolution resolution_;
  std::optional<MLPModel> model_;
  Eigen::VectorXd input_mean_, input_scale_;
  Eigen::VectorXd output_mean_, output_scale_;
};

}  // namespace gazekit
