#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace roomlayout {

enum class ErrorCode {
  InvalidArgument,
  DegenerateSurface,
  DegeneratePlane,
  DegenerateConfiguration,
  NoConsensus,
  EmptyRegion,
  InvalidFootprint,
  NoInstances,
  IllConditionedCorner,
  EmptyOverlap,
  ShapeMismatch,
  NonFiniteLoss,
  MissingField,
  CorruptRaster,
  IntrinsicsMismatch,
};

std::string_view to_string(ErrorCode code);

// Input errors map to CLI exit code 2, everything else (numerical failures) to 3.
bool is_input_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace roomlayout
