#include "lumenpaint/error.hpp"

#include <atomic>

#include "lumenpaint/parallel.hpp"

namespace lumenpaint {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kNonTriangleFace: return "non_triangle_face";
    case ErrorCode::kDegenerateFace: return "degenerate_face";
    case ErrorCode::kIndexOutOfRange: return "index_out_of_range";
    case ErrorCode::kEmptyMesh: return "empty_mesh";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kMissingColors: return "missing_colors";
    case ErrorCode::kDisconnectedMesh: return "disconnected_mesh";
    case ErrorCode::kSkeletonTooSmall: return "skeleton_too_small";
    case ErrorCode::kTooManyStations: return "too_many_stations";
    case ErrorCode::kIsolatedNode: return "isolated_node";
    case ErrorCode::kTooFewStations: return "too_few_stations";
    case ErrorCode::kMismatchedMesh: return "mismatched_mesh";
    case ErrorCode::kUnnormalizedInput: return "unnormalized_input";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kStaleCache: return "stale_cache";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kMissingTarget: return "missing_target";
    case ErrorCode::kMissingFragments: return "missing_fragments";
    case ErrorCode::kNonFiniteLoss: return "non_finite_loss";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kImageTooSmall: return "image_too_small";
    case ErrorCode::kTrajectoryTooShort: return "trajectory_too_short";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

namespace {
std::atomic<int> g_workers{1};
}

int worker_count() { return g_workers.load(); }

void set_worker_count(int workers) { g_workers.store(workers < 1 ? 1 : workers); }

}  // namespace lumenpaint
