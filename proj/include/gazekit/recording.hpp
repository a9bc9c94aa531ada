#pragma once

#include "gazekit/geometry.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gazekit {

enum class Source { LeftEye, RightEye, Scene };
enum class LandmarkKind { Pupil, Iris, EyelidUpper, EyelidLower, Marker };
enum class Eye { Left, Right };

std::string_view to_string(Source source);
std::string_view to_string(LandmarkKind kind);
std::string_view to_string(Eye eye);
std::optional<LandmarkKind> parse_landmark_kind(std::string_view text);

/// One detector output row: a landmark set of one kind for one frame.
struct FrameLandmarks {
  std::int64_t frame_id = 0;
  std::int64_t timestamp_ns = 0;
  Source source = Source::LeftEye;
  LandmarkKind kind = LandmarkKind::Pupil;
  std::vector<Point2> points;
  double confidence = 0.0;
  bool valid = false;
};

/// All detections sharing a frame_id.
struct StreamFrame {
  std::int64_t frame_id = 0;
  std::int64_t timestamp_ns = 0;
  std::vector<FrameLandmarks> detections;

  /// First valid detection of `kind`, or nullptr.
  const FrameLandmarks* find_valid(LandmarkKind kind) const;
};

struct Stream {
  Source source = Source::LeftEye;
  std::vector<StreamFrame> frames;

  std::size_t size() const { return frames.size(); }
  std::vector<std::int64_t> timestamps() const;
};

struct Resolution {
  int width = 0;
  int height = 0;
};

struct RecordingManifest {
  Resolution eye_resolution{192, 192};
  Resolution scene_resolution{0, 0};
  double eye_fps = 200.0;
  double scene_fps = 30.0;
  std::optional<std::pair<std::int64_t, std::int64_t>> calibration_range;  // inclusive scene frames
};

struct LoadWarning {
  Source source = Source::LeftEye;
  std::size_t line = 0;
  std::string message;
};

struct Recording {
  RecordingManifest manifest;
  Stream left;
  Stream right;
  Stream scene;
  std::vector<LoadWarning> warnings;

  const Stream& eye(Eye e) const { return e == Eye::Left ? left : right; }
};

inline constexpr const char* kManifestFile = "manifest.txt";
inline constexpr const char* kLeftEyeFile = "left_eye.csv";
inline constexpr const char* kRightEyeFile = "right_eye.csv";
inline constexpr const char* kSceneFile = "scene.csv";
inline constexpr const char* kLandmarkHeader = "frame_id,timestamp_ns,kind,confidence,valid,points";

std::filesystem::path recording_dir(const std::filesystem::path& project, const std::string& recording_id);

/// Reads `<project>/<recording_id>/{manifest.txt,left_eye.csv,right_eye.csv,scene.csv}`.
/// Malformed rows are demoted to invalid detections (or dropped when the
/// frame cannot be identified) and reported in `warnings`. Throws
/// MissingManifest, IoFailure, or NonMonotoneTimestamp.
Recording load_recording(const std::filesystem::path& project, const std::string& recording_id);

RecordingManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const RecordingManifest& manifest);

/// Parses one landmark file; exposed for tests.
Stream read_landmark_stream(std::istream& in, Source source, Resolution bounds, std::vector<LoadWarning>& warnings);
void write_landmark_stream(const std::filesystem::path& path, const Stream& stream);

}  // namespace gazekit
