#pragma once

#include "gazekit/mlp.hpp"
#include "gazekit/model_io.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace gazekit {

enum class MovementLabel { Fixation, Saccade, SmoothPursuit, Blink, Error };

inline constexpr std::array<MovementLabel, 5> kAllMovementLabels = {
    MovementLabel::Fixation, MovementLabel::Saccade, MovementLabel::SmoothPursuit, MovementLabel::Blink,
    MovementLabel::Error};

std::string_view to_string(MovementLabel label);
std::optional<MovementLabel> parse_movement_label(std::string_view text);

/// Per-frame inputs of the movement stage.
struct EyeState {
  std::optional<Eigen::Vector3d> pupil_vector;
  std::optional<Eigen::Vector3d> iris_vector;
  std::optional<double> opening;
};

struct MotionFeatures {
  double pupil_angle_delta = 0.0;  // radians/frame, in [0, pi]
  double iris_angle_delta = 0.0;
  double opening_delta = 0.0;      // px/frame
  bool pupil_valid = false;
  bool iris_valid = false;
  bool opening_valid = false;
};

/// Angle between unit vectors, arccos of the clamped dot product.
double angle_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

/// `previous == nullptr` (first frame) yields zero deltas for the components
/// present in `current`.
MotionFeatures extract_motion_features(const EyeState* previous, const EyeState& current);
std::vector<MotionFeatures> extract_motion_sequence(std::span<const EyeState> frames);

/// Median of the frames' valid openings; 0 if none.
double median_opening(std::span<const EyeState> frames);

struct ThresholdConfig {
  double blink_fraction = 0.3;        // of the recording median opening
  double saccade_threshold = 0.02;    // rad/frame
  double pursuit_low = 0.004;         // rad/frame
};

/// Error fires when neither pupil nor iris is present in the frame while the
/// eye is open (or nothing at all was detected).
bool is_error_frame(const EyeState& current, double median, const ThresholdConfig& config);

/// Precedence Error > Blink > Saccade > SmoothPursuit > Fixation.
MovementLabel classify_threshold(const MotionFeatures& features, const EyeState& current, double median,
                                 const ThresholdConfig& config);
std::vector<MovementLabel> classify_sequence_threshold(std::span<const EyeState> frames,
                                                       const ThresholdConfig& config = {});

struct LabeledMotion {
  std::int64_t timestamp_ns = 0;
  MotionFeatures features;
  MovementLabel label = MovementLabel::Fixation;
};

/// `timestamp_ns,pupil_delta,iris_delta,opening_delta,label`; invalid deltas are empty cells.
std::vector<LabeledMotion> read_label_csv(const std::filesystem::path& path);
void write_label_csv(const std::filesystem::path& path, std::span<const LabeledMotion> rows);

/// Softmax classifier over Fixation/Saccade/SmoothPursuit/Blink with one
/// hidden layer of 100 rectifier units. The Error rule runs before the network.
class MovementClassifier {
 public:
  static constexpr int kHiddenUnits = 100;
  static constexpr int kInputs = 5;  // three deltas + pupil/iris validity flags

  /// Error-labelled rows are ignored; throws MissingClass when any of the
  /// four network classes has no example.
  void train(std::span<const LabeledMotion> rows, const MLPTrainSettings& settings);
  bool trained() const { return model_.has_value(); }

  /// Throws NotTrained.
  MovementLabel classify(const MotionFeatures& features, const EyeState& current, double median,
                         const ThresholdConfig& config) const;
  MovementLabel classify_features(const MotionFeatures& features) const;

  ModelBlock to_block() const;
  static MovementClassifier from_block(const ModelBlock& block);

  const MLPModel& model() const;

 private:
  Eigen::VectorXd encode(const MotionFeatures& f) const;

  std::optional<MLPModel> model_;
  Eigen::VectorXd input_mean_, input_scale_;
};

}  // namespace gazekit
