#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace gazekit {

enum class Method { LM, NN };
enum class FeatureKind { PC, IC, PV, IV };
enum class Combo { Left, Right, Binocular };

inline constexpr std::array<Method, 2> kMethods = {Method::LM, Method::NN};
inline constexpr std::array<FeatureKind, 4> kFeatureKinds = {FeatureKind::PC, FeatureKind::IC, FeatureKind::PV,
                                                             FeatureKind::IV};
inline constexpr std::array<Combo, 3> kCombos = {Combo::Left, Combo::Right, Combo::Binocular};

std::string_view to_string(Method m);
std::string_view to_string(FeatureKind f);
std::string_view to_string(Combo c);

/// Identifies one of the 24 gaze estimators (method x feature x eye combination).
/// Index order: method-major, then feature, then combo.
struct EstimatorKey {
  static constexpr std::size_t kCount = 24;

  Method method = Method::LM;
  FeatureKind feature = FeatureKind::PC;
  Combo combo = Combo::Left;

  std::size_t index() const;
  static EstimatorKey from_index(std::size_t index);
  /// e.g. "LM_PC_Left"
  std::string name() const;
  static std::optional<EstimatorKey> parse(std::string_view name);

  friend bool operator==(const EstimatorKey&, const EstimatorKey&) = default;
};

/// Input dimension: 2 for centres, 5 for vectors (eyeball centre + unit
/// vector), doubled for the binocular combination.
int feature_dimension(FeatureKind feature, Combo combo);

}  // namespace gazekit
