#include "bevmod/error.hpp"

namespace bevmod {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kBadRotation: return "BadRotation";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kPoleSingularity: return "PoleSingularity";
    case ErrorCode::kMissingPose: return "MissingPose";
    case ErrorCode::kBadTimestamps: return "BadTimestamps";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kDegeneratePoints: return "DegeneratePoints";
    case ErrorCode::kHorizonPoint: return "HorizonPoint";
    case ErrorCode::kShapeError: return "ShapeError";
    case ErrorCode::kDiverged: return "Diverged";
    case ErrorCode::kGridMismatch: return "GridMismatch";
    case ErrorCode::kEmptyEval: return "EmptyEval";
    case ErrorCode::kCheckpointMismatch: return "CheckpointMismatch";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

}  // namespace bevmod
