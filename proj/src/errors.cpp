#include "roomlayout/errors.hpp"

namespace roomlayout {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateSurface: return "DegenerateSurface";
    case ErrorCode::DegeneratePlane: return "DegeneratePlane";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::NoConsensus: return "NoConsensus";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::InvalidFootprint: return "InvalidFootprint";
    case ErrorCode::NoInstances: return "NoInstances";
    case ErrorCode::IllConditionedCorner: return "IllConditionedCorner";
    case ErrorCode::EmptyOverlap: return "EmptyOverlap";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::CorruptRaster: return "CorruptRaster";
    case ErrorCode::IntrinsicsMismatch: return "IntrinsicsMismatch";
  }
  return "Unknown";
}

bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidFootprint:
    case ErrorCode::EmptyRegion:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::MissingField:
    case ErrorCode::CorruptRaster:
    case ErrorCode::IntrinsicsMismatch:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace roomlayout
