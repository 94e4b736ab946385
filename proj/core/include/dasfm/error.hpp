#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dasfm {

enum class ErrorCode {
  NotSkewSymmetric,
  NearPiAmbiguity,
  DegenerateMatrix,
  NotARotation,
  TooFewPoints,
  DegenerateScene,
  BadSampling,
  SingularInertia,
  BadFilterSpec,
  SeriesTooShort,
  TooFewFramesOrPoints,
  LengthMismatch,
  RankDeficient,
  SingularTransform,
  IndefiniteQ,
  DegenerateConfiguration,
  DimensionMismatch,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception. `stage()` is set by
// solver::reconstruct to the name of the pipeline stage that failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::string stage = {})
      : std::runtime_error(what), code_(code), stage_(std::move(stage)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorCode code_;
  std::string stage_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace dasfm
