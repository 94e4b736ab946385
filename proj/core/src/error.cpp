#include "dasfm/error.hpp"

namespace dasfm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotSkewSymmetric: return "NotSkewSymmetric";
    case ErrorCode::NearPiAmbiguity: return "NearPiAmbiguity";
    case ErrorCode::DegenerateMatrix: return "DegenerateMatrix";
    case ErrorCode::NotARotation: return "NotARotation";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateScene: return "DegenerateScene";
    case ErrorCode::BadSampling: return "BadSampling";
    case ErrorCode::SingularInertia: return "SingularInertia";
    case ErrorCode::BadFilterSpec: return "BadFilterSpec";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::TooFewFramesOrPoints: return "TooFewFramesOrPoints";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::SingularTransform: return "SingularTransform";
    case ErrorCode::IndefiniteQ: return "IndefiniteQ";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace dasfm
