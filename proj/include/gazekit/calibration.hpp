#pragma once

#include "gazekit/estimator_key.hpp"
#include "gazekit/features.hpp"
#include "gazekit/geometry.hpp"
#include "gazekit/lm.hpp"
#include "gazekit/mlp.hpp"
#include "gazekit/polynomial.hpp"
#include "gazekit/recording.hpp"

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gazekit {

// ---------------------------------------------------------------------------
// Synchronization

/// Index of the timestamp closest to `t` in an increasing sequence; the
/// earlier frame wins ties. Throws EmptyStream.
std::size_t nearest_index(std::span<const std::int64_t> timestamps, std::int64_t t);

struct SyncAssignment {
  std::size_t scene_index = 0;
  std::int64_t scene_frame_id = 0;
  std::optional<std::size_t> left_index;
  std::optional<std::size_t> right_index;
  std::optional<std::int64_t> left_eye_frame_id;
  std::optional<std::int64_t> right_eye_frame_id;
  std::optional<std::int64_t> left_offset_ns;  // eye minus scene
  std::optional<std::int64_t> right_offset_ns;
};

struct SyncResult {
  /// One entry per scene frame: the nearest eye frame of each eye.
  std::vector<SyncAssignment> nearest;
  /// Per eye frame: index of the nearest scene frame.
  std::vector<std::size_t> left_to_scene;
  std::vector<std::size_t> right_to_scene;
};

/// Throws EmptyStream when the scene stream or both eye streams are empty.
SyncResult synchronize(const Stream& scene, const Stream& left, const Stream& right);
SyncResult synchronize(std::span<const std::int64_t> scene_ts, std::span<const std::int64_t> left_ts,
                       std::span<const std::int64_t> right_ts, std::span<const std::int64_t> scene_ids = {},
                       std::span<const std::int64_t> left_ids = {}, std::span<const std::int64_t> right_ids = {});

// ---------------------------------------------------------------------------
// Feature recipes

/// Centres divided by the eye resolution; vector features are the normalised
/// eyeball centre followed by the unit vector.
std::optional<Eigen::VectorXd> eye_feature_vector(const EyeFeatures& eye, FeatureKind feature, Resolution eye_resolution);

/// Binocular vectors concatenate left then right. Per-eye combinations never
/// touch the other eye.
std::optional<Eigen::VectorXd> combo_feature_vector(const EyeFeatures* left, const EyeFeatures* right,
                                                    FeatureKind feature, Combo combo, Resolution eye_resolution);

// ---------------------------------------------------------------------------
// Calibration data selection

struct CalibrationPair {
  Eigen::VectorXd features;
  Point2 target{0.0, 0.0};  // marker centre, scene pixels
  std::int64_t scene_frame_id = 0;
};

struct CalibrationSettings {
  int poly_degree = 2;
  double best_fraction = 0.9;
  int window = 5;
  std::size_t min_candidates = 20;
  std::optional<std::pair<std::int64_t, std::int64_t>> range;  // inclusive scene frame ids
  LMSettings lm;
  double outlier_warning_ratio = 5.0;
};

/// Step 2: frame i survives when it and the `window` frames on each side all
/// exist and are valid.
std::vector<bool> window_filter(const std::vector<bool>& valid, int window);

/// Step 3 ranking: indices of the ceil(fraction * N) smallest errors, in
/// ascending error order (stable on ties).
std::vector<std::size_t> keep_best_fraction(std::span<const double> errors, double fraction);

struct ComboSelection {
  std::vector<std::int64_t> candidate_frames;  // after step 2, with the combo's pupil centres available
  std::vector<std::int64_t> kept_frames;
  std::vector<std::int64_t> dropped_frames;
  std::vector<double> kept_errors;             // provisional-fit error, px
  std::vector<double> dropped_errors;
  std::optional<PolynomialModel> provisional;  // fitted on normalised inputs/targets
};

struct CalibrationSelection {
  std::vector<std::size_t> step1;  // scene indices with a valid marker inside the range
  std::vector<std::size_t> step2;  // survivors of the window filter
  std::array<ComboSelection, 3> combos;
  std::array<std::vector<CalibrationPair>, 12> pairs;
  std::vector<std::string> warnings;

  const std::vector<CalibrationPair>& pairs_for(FeatureKind feature, Combo combo) const;
};

/// `markers` holds one observation per scene frame (index-aligned with the
/// scene stream). Throws CalibrationTooSmall.
CalibrationSelection select_calibration_pairs(std::span<const MarkerObservation> markers,
                                              std::span<const EyeFeatures> left, std::span<const EyeFeatures> right,
                                              const SyncResult& sync, const RecordingManifest& manifest,
                                              const CalibrationSettings& settings = {});

// ---------------------------------------------------------------------------
// Gaze estimators

struct GazeEstimator {
  EstimatorKey key;
  Resolution scene_resolution;
  std::optional<PolynomialModel> polynomial;  // LM: maps features to target / resolution
  std::optional<MLPModel> mlp;                // NN: standardised in and out
  Eigen::VectorXd input_mean, input_scale;
  Eigen::Vector2d output_mean{0.0, 0.0}, output_scale{1.0, 1.0};
  std::size_t training_pairs = 0;
  double training_error_px = 0.0;

  Point2 predict(const Eigen::VectorXd& features) const;
};

struct GazeEstimatorBank {
  Resolution eye_resolution;
  Resolution scene_resolution;
  std::array<std::optional<GazeEstimator>, EstimatorKey::kCount> estimators;

  const std::optional<GazeEstimator>& at(const EstimatorKey& key) const { return estimators[key.index()]; }
  std::size_t fitted_count() const;
};

struct BankSettings {
  int poly_degree = 2;
  LMSettings lm;
  MLPTrainSettings mlp;
  std::vector<int> hidden_layers{50, 20};
  bool fit_lm = true;
  bool fit_nn = true;
  int jobs = 1;
};

/// Fits every estimator with a non-empty pair list; an estimator that cannot
/// be fitted stays absent.
GazeEstimatorBank fit_gaze_bank(const CalibrationSelection& selection, const RecordingManifest& manifest,
                                const BankSettings& settings = {});

using GazeEstimates = std::array<std::optional<Point2>, EstimatorKey::kCount>;

GazeEstimates estimate_gaze(const GazeEstimatorBank& bank, const EyeFeatures* left, const EyeFeatures* right);

void write_bank(const std::filesystem::path& path, const GazeEstimatorBank& bank);
GazeEstimatorBank read_bank(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Evaluation

struct GazeEvalRow {
  std::int64_t scene_frame_id = 0;
  bool nearest = false;  // the row's eye frame is the one closest to its scene frame
  std::optional<Point2> truth;
  GazeEstimates estimates;
};

struct EstimatorAccuracy {
  double mean_all = 0.0;      // over every assigned gaze row
  std::size_t count_all = 0;
  double mean_nearest = 0.0;  // nearest eye frame per scene frame only
  std::size_t count_nearest = 0;
};

/// Mean Euclidean pixel error per estimator. Throws NoEvaluationFrames.
std::array<EstimatorAccuracy, EstimatorKey::kCount> accuracy_report(std::span<const GazeEvalRow> rows);

struct ValidityStats {
  double valid_gaze_percent = 0.0;
  double scene_frames_with_valid_percent = 0.0;
};

std::array<ValidityStats, EstimatorKey::kCount> validity_stats(std::span<const GazeEvalRow> rows);

}  // namespace gazekit
