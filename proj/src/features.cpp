#include "gazekit/features.hpp"

#include "gazekit/error.hpp"

namespace gazekit {

void EyeFeatures::refresh_validity() {
  std::uint32_t v = validity & (kPupilOutsideSphere | kIrisOutsideSphere);
  if (pupil) v |= kPupilValid;
  if (iris) v |= kIrisValid;
  if (opening_px) v |= kEyelidsValid;
  if (pupil_vector) v |= kPupilVectorValid;
  if (iris_vector) v |= kIrisVectorValid;
  if (eyeball && eyeball->low_confidence) v |= kEyeballLowConfidence;
  validity = v;
}

void fill_ellipses(EyeFeatures& out, const StreamFrame& frame) {
  out.frame_id = frame.frame_id;
  out.timestamp_ns = frame.timestamp_ns;
  const auto ellipse_of = [&](LandmarkKind kind) -> std::optional<Ellipse> {
    const auto* det = frame.find_valid(kind);
    if (!det) return std::nullopt;
    try {
      return fit_ellipse(det->points);
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  out.pupil = ellipse_of(LandmarkKind::Pupil);
  out.iris = ellipse_of(LandmarkKind::Iris);
  out.refresh_validity();
}

void fill_opening(EyeFeatures& out, const StreamFrame& frame) {
  out.opening_px.reset();
  const auto* upper = frame.find_valid(LandmarkKind::EyelidUpper);
  const auto* lower = frame.find_valid(LandmarkKind::EyelidLower);
  if (upper && lower) {
    try {
      const auto lids = fit_eyelid_splines(upper->points, lower->points);
      out.opening_px = compute_eye_opening(lids.upper, lids.lower, lids.corners);
    } catch (const Error&) {
      out.opening_px.reset();
    }
  }
  out.refresh_validity();
}

EyeFeatures frame_geometry(const StreamFrame& frame) {
  EyeFeatures out;
  fill_ellipses(out, frame);
  fill_opening(out, frame);
  return out;
}

std::vector<EyeFeatures> stream_geometry(const Stream& stream, int jobs) {
  std::vector<EyeFeatures> out(stream.frames.size());
  parallel_for(stream.frames.size(), jobs, [&](std::size_t i) { out[i] = frame_geometry(stream.frames[i]); });
  return out;
}

EyeballModel estimate_recording_eyeball(std::span<const EyeFeatures> frames, Resolution resolution,
                                        const EyeballSettings& settings) {
  std::vector<Ellipse> ellipses;
  for (const auto& f : frames) {
    if (settings.ellipses != EyeballEllipses::Iris && f.pupil) ellipses.push_back(*f.pupil);
    if (settings.ellipses != EyeballEllipses::Pupil && f.iris) ellipses.push_back(*f.iris);
  }
  if (ellipses.empty()) return fallback_eyeball(resolution);
  const auto diverse = select_diverse_ellipses(ellipses, resolution);
  if (settings.learned) return settings.learned->estimate(diverse);
  try {
    return estimate_eyeball_geometric(diverse, settings.geometric);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::IllConditioned) throw;
    return fallback_eyeball(resolution);
  }
}

void attach_optical_vectors(std::span<EyeFeatures> frames, const EyeballModel& eyeball) {
  for (auto& f : frames) {
    f.eyeball = eyeball;
    f.validity &= ~(kPupilOutsideSphere | kIrisOutsideSphere);
    f.pupil_vector.reset();
    f.iris_vector.reset();
    if (f.pupil) {
      const auto v = optical_vector(eyeball, f.pupil->center, OpticalOrigin::PupilCenter);
      f.pupil_vector = v.v;
      if (v.outside_sphere) f.validity |= kPupilOutsideSphere;
    }
    if (f.iris) {
      const auto v = optical_vector(eyeball, f.iris->center, OpticalOrigin::IrisCenter);
      f.iris_vector = v.v;
      if (v.outside_sphere) f.validity |= kIrisOutsideSphere;
    }
    f.refresh_validity();
  }
}

EyeState to_eye_state(const EyeFeatures& features) {
  return EyeState{features.pupil_vector, features.iris_vector, features.opening_px};
}

}  // namespace gazekit
