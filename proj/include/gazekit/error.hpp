#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gazekit {

enum class ErrorCode {
  MissingManifest,
  MalformedRow,
  NonMonotoneTimestamp,
  IoFailure,
  DegenerateInput,
  IllConditioned,
  NotTrained,
  MissingClass,
  NonFiniteResidual,
  DimMismatch,
  EmptyDataset,
  NonFiniteLoss,
  TooFewSamples,
  EmptyStream,
  CalibrationTooSmall,
  NoEvaluationFrames,
  NonPositiveArea,
  FitDiverged,
  InvalidScript,
  Misaligned,
  InvalidConfig,
  ModelFormat,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gazekit
