#pragma once

#include "gazekit/csv_io.hpp"
#include "gazekit/estimator_key.hpp"
#include "gazekit/features.hpp"
#include "gazekit/movement.hpp"
#include "gazekit/synth.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

namespace gazekit {

struct GazeScore {
  std::size_t rows_all = 0;
  double mean_all = 0.0;       // NaN without rows
  std::size_t rows_held_out = 0;
  double mean_held_out = 0.0;  // scene frames outside the calibration range
};

/// counts[truth][predicted], indexed by MovementLabel.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, 5>, 5> counts{};

  void add(MovementLabel truth, MovementLabel predicted);
  std::size_t total(MovementLabel truth) const;
  /// Fraction of `truth` frames labelled correctly; NaN when there are none.
  double class_accuracy(MovementLabel truth) const;
  bool diagonal() const;
};

struct EyeballScore {
  double center_error_px = 0.0;
  double radius_relative_error = 0.0;
};

struct ScoreReport {
  std::array<GazeScore, EstimatorKey::kCount> gaze;
  ConfusionMatrix left_movements;
  ConfusionMatrix right_movements;
  std::optional<double> depth_powerlaw_mae_cm;
  std::optional<double> depth_knn_mae_cm;
  std::optional<EyeballScore> left_eyeball;
  std::optional<EyeballScore> right_eyeball;

  std::string to_text() const;
};

struct PipelineOutputs {
  std::vector<GazeRecord> gaze;
  std::vector<MovementRecord> movements;
  std::vector<DepthRecord> depth;
  std::vector<EyeFeatures> left_features;
  std::vector<EyeFeatures> right_features;
};

/// Aligns outputs with the truth by frame id (no resampling). Throws Misaligned
/// when row counts or frame ids disagree.
ScoreReport score_pipeline(const PipelineOutputs& outputs, const GroundTruth& truth);

/// Reads the CSVs of a `process` run; missing feature files are tolerated.
PipelineOutputs read_pipeline_outputs(const std::filesystem::path& out_dir);

}  // namespace gazekit
