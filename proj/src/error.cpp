#include "gazekit/error.hpp"

namespace gazekit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingManifest: return "MissingManifest";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonMonotoneTimestamp: return "NonMonotoneTimestamp";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::NotTrained: return "NotTrained";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::NonFiniteResidual: return "NonFiniteResidual";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::EmptyStream: return "EmptyStream";
    case ErrorCode::CalibrationTooSmall: return "CalibrationTooSmall";
    case ErrorCode::NoEvaluationFrames: return "NoEvaluationFrames";
    case ErrorCode::NonPositiveArea: return "NonPositiveArea";
    case ErrorCode::FitDiverged: return "FitDiverged";
    case ErrorCode::InvalidScript: return "InvalidScript";
    case ErrorCode::Misaligned: return "Misaligned";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ModelFormat: return "ModelFormat";
  }
  return "Unknown";
}

}  // namespace gazekit
