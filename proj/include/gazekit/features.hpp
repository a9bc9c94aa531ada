#pragma once

#include "gazekit/eyeball.hpp"
#include "gazekit/geometry.hpp"
#include "gazekit/movement.hpp"
#include "gazekit/recording.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <thread>
#include <vector>

namespace gazekit {

/// Bits of EyeFeatures::validity.
enum FeatureValidity : std::uint32_t {
  kPupilValid = 1u << 0,
  kIrisValid = 1u << 1,
  kEyelidsValid = 1u << 2,
  kPupilVectorValid = 1u << 3,
  kIrisVectorValid = 1u << 4,
  kEyeballLowConfidence = 1u << 5,
  kPupilOutsideSphere = 1u << 6,
  kIrisOutsideSphere = 1u << 7,
};

/// Derived geometry of one eye frame.
struct EyeFeatures {
  std::int64_t frame_id = 0;
  std::int64_t timestamp_ns = 0;
  std::optional<Ellipse> pupil;
  std::optional<Ellipse> iris;
  std::optional<double> opening_px;
  std::optional<EyeballModel> eyeball;
  std::optional<Eigen::Vector3d> pupil_vector;
  std::optional<Eigen::Vector3d> iris_vector;
  std::uint32_t validity = 0;

  /// Recomputes `validity` from the optional fields, keeping the
  /// outside-sphere bits.
  void refresh_validity();
};

/// Pupil and iris ellipses of one frame; failing fits leave the field empty.
void fill_ellipses(EyeFeatures& out, const StreamFrame& frame);
/// Eyelid opening of one frame; empty without both lid detections.
void fill_opening(EyeFeatures& out, const StreamFrame& frame);

/// Ellipses and eyelid opening for one frame.
EyeFeatures frame_geometry(const StreamFrame& frame);

/// frame_geometry over a whole stream with `jobs` worker threads; output order
/// follows the stream.
std::vector<EyeFeatures> stream_geometry(const Stream& stream, int jobs = 1);

enum class EyeballEllipses { Pupil, Iris, Both };

struct EyeballSettings {
  EyeballEllipses ellipses = EyeballEllipses::Pupil;
  GeometricEyeballSettings geometric;
  const LearnedEyeballEstimator* learned = nullptr;  // used instead of the geometric fit when set
};

/// One eyeball per recording from the diverse subset of all valid ellipses;
/// falls back to the image-centre model when the geometric fit is ill-conditioned.
EyeballModel estimate_recording_eyeball(std::span<const EyeFeatures> frames, Resolution resolution,
                                        const EyeballSettings& settings = {});

/// Fills eyeball and optical vectors for every frame with a pupil/iris ellipse.
void attach_optical_vectors(std::span<EyeFeatures> frames, const EyeballModel& eyeball);

EyeState to_eye_state(const EyeFeatures& features);

/// Runs `fn(i)` for i in [0, count) on `jobs` threads (contiguous chunks).
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  const auto requested = static_cast<std::size_t>(std::max(jobs, 1));
  const std::size_t workers = std::max<std::size_t>(1, std::min(requested, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace gazekit
