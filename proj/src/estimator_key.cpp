#include "gazekit/estimator_key.hpp"

#include "gazekit/error.hpp"

#include <string>

namespace gazekit {

std::string_view to_string(Method m) { return m == Method::LM ? "LM" : "NN"; }

std::string_view to_string(FeatureKind f) {
  switch (f) {
    case FeatureKind::PC: return "PC";
    case FeatureKind::IC: return "IC";
    case FeatureKind::PV: return "PV";
    case FeatureKind::IV: return "IV";
  }
  return "?";
}

std::string_view to_string(Combo c) {
  switch (c) {
    case Combo::Left: return "Left";
    case Combo::Right: return "Right";
    case Combo::Binocular: return "Binocular";
  }
  return "?";
}

std::size_t EstimatorKey::index() const {
  return static_cast<std::size_t>(method) * 12 + static_cast<std::size_t>(feature) * 3 +
         static_cast<std::size_t>(combo);
}

EstimatorKey EstimatorKey::from_index(std::size_t index) {
  if (index >= kCount) throw Error(ErrorCode::DimMismatch, "estimator index out of range");
  return EstimatorKey{kMethods[index / 12], kFeatureKinds[(index / 3) % 4], kCombos[index % 3]};
}

std::string EstimatorKey::name() const {
  std::string out(to_string(method));
  out += '_';
  out += to_string(feature);
  out += '_';
  out += to_string(combo);
  return out;
}

std::optional<EstimatorKey> EstimatorKey::parse(std::string_view name) {
  for (std::size_t i = 0; i < kCount; ++i) {
    const EstimatorKey key = from_index(i);
    if (key.name() == name) return key;
  }
  return std::nullopt;
}

int feature_dimension(FeatureKind feature, Combo combo) {
  const int per_eye = (feature == FeatureKind::PC || feature == FeatureKind::IC) ? 2 : 5;
  return combo == Combo::Binocular ? 2 * per_eye : per_eye;
}

}  // namespace gazekit
