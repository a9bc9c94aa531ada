#pragma once

#include "gazekit/depth.hpp"
#include "gazekit/eyeball.hpp"
#include "gazekit/geometry.hpp"
#include "gazekit/movement.hpp"
#include "gazekit/recording.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gazekit {

enum class RegimeType { Fixation, Saccade, Pursuit, Blink };

/// One row of the regime table. Fixation holds at (param1, param2) degrees
/// of yaw/pitch when given, else at the current pose; saccade and pursuit move
/// linearly to (param1, param2); blink holds the pose and closes the lids,
/// param1 being the fraction of the regime spent on each lid ramp.
struct Regime {
  double start_s = 0.0;
  double end_s = 0.0;
  RegimeType type = RegimeType::Fixation;
  std::optional<double> param1;
  std::optional<double> param2;
};

struct SyntheticEye {
  Point2 center{96.0, 96.0};
  double radius = 60.0;
};

struct SceneScript {
  double duration_s = 10.0;
  double eye_fps = 200.0;
  double scene_fps = 30.0;
  Resolution eye_resolution{192, 192};
  Resolution scene_resolution{1088, 1080};
  SyntheticEye left{{96.0, 96.0}, 60.0};
  SyntheticEye right{{100.0, 94.0}, 58.0};
  double pupil_radius = 8.0;
  double iris_radius = 20.0;
  double start_yaw_deg = 0.0;
  double start_pitch_deg = 0.0;
  double noise_px = 0.0;       // landmark sigma
  double dropout = 0.0;        // per eye frame probability of losing pupil and iris
  bool hard_mode = false;      // adds a cubic term to the true gaze map
  double nasal_squash = 1.0;   // x scale applied to the nasal half of the eye image; 1 disables
  double depth_start_cm = 100.0;
  double depth_end_cm = 250.0;
  double depth_sample_step_cm = 50.0;
  double depth_sample_max_cm = 400.0;
  PowerLawDepth depth_model;
  std::optional<std::pair<std::int64_t, std::int64_t>> calibration_range;
  std::uint64_t seed = 1;
  std::vector<Regime> regimes;
};

/// Parses `key=value` lines and `start_s,end_s,type,param1,param2` rows, then
/// validates. Throws InvalidScript.
SceneScript parse_scene_script(const std::string& text);
SceneScript read_scene_script(const std::filesystem::path& path);
std::string format_scene_script(const SceneScript& script);
/// Throws InvalidScript when regimes do not tile [0, duration] or values are
/// out of range.
void validate_scene_script(const SceneScript& script);

/// 10 s at 200/30 Hz: calibration sweeps in the first half, then fixations,
/// saccades, pursuits and a blink.
SceneScript default_scene_script();

/// Scene pixel looked at for gaze direction (gx, gy) (components of the unit
/// gaze vector).
Point2 true_gaze_point(const SceneScript& script, double gx, double gy);

struct EyeTruthRow {
  std::int64_t frame_id = 0;
  std::int64_t timestamp_ns = 0;
  double yaw_rad = 0.0;
  double pitch_rad = 0.0;
  Point2 gaze{0.0, 0.0};
  MovementLabel left_label = MovementLabel::Fixation;
  MovementLabel right_label = MovementLabel::Fixation;
  double left_opening_px = 0.0;
  double right_opening_px = 0.0;
};

struct SceneTruthRow {
  std::int64_t scene_frame_id = 0;
  std::int64_t timestamp_ns = 0;
  Point2 marker{0.0, 0.0};
  double area_px2 = 0.0;
  double depth_cm = 0.0;
};

struct GroundTruth {
  std::vector<EyeTruthRow> eye;
  std::vector<SceneTruthRow> scene;
  EyeballModel left_eyeball;
  EyeballModel right_eyeball;
  std::optional<std::pair<std::int64_t, std::int64_t>> calibration_range;
};

struct SyntheticRecording {
  Recording recording;
  GroundTruth truth;
  std::vector<DepthSample> depth_samples;
};

/// Deterministic for a given script (including its seed).
SyntheticRecording generate(const SceneScript& script);

inline constexpr const char* kTruthEyeFile = "truth_eye.csv";
inline constexpr const char* kTruthSceneFile = "truth_scene.csv";
inline constexpr const char* kTruthEyeballFile = "truth_eyeball.txt";
inline constexpr const char* kDepthSamplesFile = "depth_samples.csv";

/// Writes the recording files (manifest and landmark streams), the depth
/// samples and the truth files into `dir`.
void write_synthetic_recording(const std::filesystem::path& dir, const SyntheticRecording& synth);
GroundTruth read_ground_truth(const std::filesystem::path& dir);

/// Pupil ellipse of a disc of radius `rho` on the eyeball surface for gaze
/// (gx, gy) under orthographic projection; `mirror_x` flips the image x axis.
Ellipse projected_disc(const SyntheticEye& eye, double rho, double gx, double gy, bool mirror_x = false);

/// Random eyeballs with analytic ellipse observations, reduced to their
/// diverse subsets, for training the learned eyeball estimator.
std::vector<EyeballTrainingPair> make_eyeball_training_set(std::size_t scenes, Resolution resolution,
                                                           std::uint64_t seed, std::size_t frames_per_scene = 200);

}  // namespace gazekit
