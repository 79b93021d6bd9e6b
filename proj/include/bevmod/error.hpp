#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bevmod {

enum class ErrorCode {
  kMissingField,
  kMalformedLine,
  kBadRotation,
  kParseError,
  kPoleSingularity,
  kMissingPose,
  kBadTimestamps,
  kBadConfig,
  kDegeneratePoints,
  kHorizonPoint,
  kShapeError,
  kDiverged,
  kGridMismatch,
  kEmptyEval,
  kCheckpointMismatch,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// Every failure in the library surfaces as this exception; `code()` is the
// stable machine-readable part, `what()` carries "<Code>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bevmod
