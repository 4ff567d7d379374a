#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lumenpaint {

enum class ErrorCode {
  kParse,
  kNonTriangleFace,
  kDegenerateFace,
  kIndexOutOfRange,
  kEmptyMesh,
  kIo,
  kMissingColors,
  kDisconnectedMesh,
  kSkeletonTooSmall,
  kTooManyStations,
  kIsolatedNode,
  kTooFewStations,
  kMismatchedMesh,
  kUnnormalizedInput,
  kDimensionMismatch,
  kStaleCache,
  kShapeMismatch,
  kFormat,
  kTruncated,
  kMissingTarget,
  kMissingFragments,
  kNonFiniteLoss,
  kInvalidArgument,
  kImageTooSmall,
  kTrajectoryTooShort,
  kConfig,
};

/// Stable machine-readable name, used in CLI error lines.
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lumenpaint
