#include "wordspot/error.hpp"

namespace wordspot {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyWord: return "EmptyWord";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kOutOfAlphabet: return "OutOfAlphabet";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kInvalidProbability: return "InvalidProbability";
    case ErrorCode::kInputTooNarrow: return "InputTooNarrow";
    case ErrorCode::kShapeInferenceFailure: return "ShapeInferenceFailure";
    case ErrorCode::kArchMismatch: return "ArchMismatch";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kNoRelevantItems: return "NoRelevantItems";
    case ErrorCode::kEmptyQuerySet: return "EmptyQuerySet";
    case ErrorCode::kMissingImage: return "MissingImage";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kMalformedRow: return "MalformedRow";
    case ErrorCode::kWrongPageCount: return "WrongPageCount";
    case ErrorCode::kEmptyClass: return "EmptyClass";
    case ErrorCode::kDataUnavailable: return "DataUnavailable";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kBadCheckpoint: return "BadCheckpoint";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kInputTooNarrow:
    case ErrorCode::kShapeInferenceFailure:
    case ErrorCode::kArchMismatch:
      return ErrorCategory::kShape;
    case ErrorCode::kMissingImage:
    case ErrorCode::kDuplicateId:
    case ErrorCode::kWrongPageCount:
    case ErrorCode::kEmptyClass:
    case ErrorCode::kDataUnavailable:
    case ErrorCode::kIo:
      return ErrorCategory::kData;
    case ErrorCode::kZeroVector:
    case ErrorCode::kDivergedLoss:
      return ErrorCategory::kNumeric;
    case ErrorCode::kMalformedRow:
    case ErrorCode::kBadConfig:
    case ErrorCode::kBadCheckpoint:
      return ErrorCategory::kFormat;
    default:
      return ErrorCategory::kInvalidArgument;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

}  // namespace wordspot
