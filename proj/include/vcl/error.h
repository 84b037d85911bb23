#ifndef VCL_ERROR_H_
#define VCL_ERROR_H_

#include <stdexcept>
#include <string>

namespace vcl {

enum class ErrorCode {
  kDuplicateHoi,
  kDanglingId,
  kEmptyDefinition,
  kShapeMismatch,
  kDegenerateBox,
  kInvalidBox,
  kInvalidConfig,
  kParseError,
  kInconsistentLabel,
  kDimensionMismatch,
  kEmptyBatch,
  kNonFiniteInput,
  kNonFiniteLoss,
  kNonFiniteGradient,
  kNonFiniteUpdate,
  kOutOfRange,
  kDivergedTraining,
  kInfeasibleSplit,
  kUnknownHoiId,
  kIoError,
  kUsage,
};

const char* ErrorCodeName(ErrorCode code);

// All library failures are reported as vcl::Error; code() identifies the
// failure class so callers (and tests) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vcl

#endif  // VCL_ERROR_H_
