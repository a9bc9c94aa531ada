#pragma once

#include "gazekit/calibration.hpp"
#include "gazekit/depth.hpp"
#include "gazekit/error.hpp"
#include "gazekit/score.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gazekit {

/// Every tunable of a `process` run. Resolved from defaults, then a config
/// file, then command-line flags, before any stage runs.
struct PipelineConfig {
  int poly_degree = 2;
  double best_fraction = 0.9;
  int window = 5;
  std::size_t min_calibration_frames = 20;
  std::optional<std::pair<std::int64_t, std::int64_t>> calib_range;
  double blink_fraction = 0.3;
  double saccade_threshold = 0.02;
  double pursuit_low = 0.004;
  PowerLawDepth depth;
  bool depth_fit = false;       // refit the power law from the depth samples
  std::string depth_samples;    // empty: <recording>/depth_samples.csv when present
  std::uint64_t seed = 0;
  int jobs = 1;
  double nn_lr = 0.1;
  double nn_momentum = 0.9;
  double nn_weight_decay = 0.0005;
  int nn_epochs = 2000;         // per stage
  int nn_stages = 2;
  int nn_restarts = 4;
  std::vector<int> nn_hidden{50, 20};
  EyeballEllipses eyeball_ellipses = EyeballEllipses::Pupil;
  RadiusMethod radius_method = RadiusMethod::Foreshortening;
  std::string eyeball_model;    // learned eyeball estimator file; empty: geometric
  std::string movement_model;   // movement classifier file; empty: thresholds
};

/// Applies one `key=value` setting. Throws InvalidConfig.
void apply_config_value(PipelineConfig& config, const std::string& key, const std::string& value);
/// `key=value` lines, `#` comments. Throws InvalidConfig or IoFailure.
void apply_config_file(PipelineConfig& config, const std::filesystem::path& path);
std::string format_config(const PipelineConfig& config);
std::pair<std::int64_t, std::int64_t> parse_frame_range(const std::string& text);  // "A:B"

/// A fatal module error tagged with the stage that raised it.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, ErrorCode code, const std::string& message)
      : std::runtime_error("stage " + stage + ": " + message), stage_(std::move(stage)), code_(code) {}
  const std::string& stage() const noexcept { return stage_; }
  ErrorCode code() const noexcept { return code_; }

 private:
  std::string stage_;
  ErrorCode code_;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
  std::size_t items = 0;
};

inline constexpr const char* kBankFile = "bank.txt";
inline constexpr const char* kConfigFile = "config_resolved.txt";
inline constexpr const char* kReportFile = "report.txt";
inline constexpr const char* kEvalReportFile = "eval_report.txt";

struct ProcessResult {
  std::vector<StageTiming> timings;
  std::vector<std::string> warnings;
  GazeEstimatorBank bank;
  std::size_t gaze_rows = 0;
  /// Scene frame ids that passed the calibration range and marker checks (step 1).
  std::vector<std::int64_t> calibration_candidates;
  /// Accuracy against the markers of scene frames outside the calibration
  /// range; empty when there are none.
  std::optional<std::array<EstimatorAccuracy, EstimatorKey::kCount>> accuracy;
  std::array<ValidityStats, EstimatorKey::kCount> validity{};
};

/// Full workflow over `<project>/<recording>`, writing every output into
/// `out_dir`. Throws StageError.
ProcessResult run_process(const std::filesystem::path& project, const std::string& recording,
                          const PipelineConfig& config, const std::filesystem::path& out_dir);

std::string format_timings(const std::vector<StageTiming>& timings);

/// Writes a synthetic recording; an empty script path uses the built-in script.
void run_synth(const std::filesystem::path& script, const std::filesystem::path& out_dir);

/// Scores a `process` output directory against a synthetic truth directory and
/// writes eval_report.txt into `out_dir`.
ScoreReport run_eval(const std::filesystem::path& out_dir, const std::filesystem::path& truth_dir);

/// Trains the movement classifier from a labelled CSV and writes the model.
void run_train_movements(const std::filesystem::path& labels, const std::filesystem::path& model_out,
                         const PipelineConfig& config);

/// Trains the learned eyeball estimator on generated eyeballs and writes the model.
void run_train_eyeball(std::size_t scenes, const std::filesystem::path& model_out, const PipelineConfig& config);

}  // namespace gazekit
