#pragma once

#include "gazekit/calibration.hpp"
#include "gazekit/features.hpp"
#include "gazekit/movement.hpp"
#include "gazekit/recording.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gazekit {

inline constexpr const char* kGazeFile = "gaze.csv";
inline constexpr const char* kMovementsFile = "movements.csv";
inline constexpr const char* kDepthFile = "depth.csv";
std::string features_file_name(Eye eye);  // features_left.csv / features_right.csv

/// One output gaze row, driven by a single eye frame.
struct GazeRecord {
  std::int64_t scene_frame_id = 0;
  std::optional<std::int64_t> left_frame_id;
  std::optional<std::int64_t> left_timestamp_ns;
  std::optional<std::int64_t> right_frame_id;
  std::optional<std::int64_t> right_timestamp_ns;
  GazeEstimates estimates;
};

struct MovementRecord {
  Eye eye = Eye::Left;
  std::int64_t timestamp_ns = 0;
  MovementLabel label = MovementLabel::Fixation;
};

struct DepthRecord {
  std::int64_t scene_frame_id = 0;
  std::optional<double> marker_area_px2;
  std::optional<double> depth_cm_powerlaw;
  std::optional<double> depth_cm_knn;
};

std::string features_csv_header();
std::string gaze_csv_header();
inline constexpr const char* kMovementsHeader = "eye,timestamp_ns,label";
inline constexpr const char* kDepthHeader = "scene_frame_id,marker_area_px2,depth_cm_powerlaw,depth_cm_knn";

/// Writers return the number of data rows; absent values become empty cells.
/// Reals are written with 9 significant digits. Throw IoFailure.
std::size_t write_features_csv(const std::filesystem::path& path, std::span<const EyeFeatures> rows);
std::size_t write_gaze_csv(const std::filesystem::path& path, std::span<const GazeRecord> rows);
std::size_t write_movements_csv(const std::filesystem::path& path, std::span<const MovementRecord> rows);
std::size_t write_depth_csv(const std::filesystem::path& path, std::span<const DepthRecord> rows);

/// Readers throw IoFailure for unreadable files and MalformedRow for bad rows.
std::vector<EyeFeatures> read_features_csv(const std::filesystem::path& path);
std::vector<GazeRecord> read_gaze_csv(const std::filesystem::path& path);
std::vector<MovementRecord> read_movements_csv(const std::filesystem::path& path);
std::vector<DepthRecord> read_depth_csv(const std::filesystem::path& path);

/// Splits on `delim` without quoting rules (none of the formats need them).
std::vector<std::string> split_fields(const std::string& line, char delim = ',');

}  // namespace gazekit
