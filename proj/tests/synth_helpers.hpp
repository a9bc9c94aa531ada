#pragma once

#include "gazekit/features.hpp"
#include "gazekit/movement.hpp"
#include "gazekit/synth.hpp"

#include <vector>

namespace gazekit::testing {

/// Features of one eye of a generated recording, with the recording eyeball
/// and optical vectors attached.
inline std::vector<EyeFeatures> synthetic_features(const Recording& rec, Eye eye) {
  auto feats = stream_geometry(rec.eye(eye), 1);
  const auto model = estimate_recording_eyeball(feats, rec.manifest.eye_resolution);
  attach_optical_vectors(feats, model);
  return feats;
}

inline std::vector<EyeState> eye_states(const std::vector<EyeFeatures>& feats) {
  std::vector<EyeState> states;
  for (const auto& f : feats) states.push_back(to_eye_state(f));
  return states;
}

inline MovementLabel truth_label(const EyeTruthRow& row, Eye eye) {
  return eye == Eye::Left ? row.left_label : row.right_label;
}

}  // namespace gazekit::testing
