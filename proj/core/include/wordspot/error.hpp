#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wordspot {

// Broad failure categories. The CLI maps each one to its own exit code.
enum class ErrorCategory {
  kInvalidArgument,
  kShape,
  kData,
  kNumeric,
  kFormat,
};

enum class ErrorCode {
  // phoc
  kEmptyWord,
  kInvalidConfig,
  kOutOfAlphabet,
  // diff
  kShapeMismatch,
  kInvalidProbability,
  kInputTooNarrow,
  // arch
  kShapeInferenceFailure,
  kArchMismatch,
  // retrieval
  kZeroVector,
  kNoRelevantItems,
  kEmptyQuerySet,
  // data
  kMissingImage,
  kDuplicateId,
  kMalformedRow,
  kWrongPageCount,
  kEmptyClass,
  kDataUnavailable,
  kIo,
  // experiment
  kDivergedLoss,
  kBadConfig,
  kBadCheckpoint,
};

std::string_view to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace wordspot
