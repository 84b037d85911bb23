#include "vcl/error.h"

namespace vcl {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDuplicateHoi: return "DuplicateHoi";
    case ErrorCode::kDanglingId: return "DanglingId";
    case ErrorCode::kEmptyDefinition: return "EmptyDefinition";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDegenerateBox: return "DegenerateBox";
    case ErrorCode::kInvalidBox: return "InvalidBox";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kInconsistentLabel: return "InconsistentLabel";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kNonFiniteUpdate: return "NonFiniteUpdate";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kDivergedTraining: return "DivergedTraining";
    case ErrorCode::kInfeasibleSplit: return "InfeasibleSplit";
    case ErrorCode::kUnknownHoiId: return "UnknownHoiId";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kUsage: return "Usage";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

}  // namespace vcl
