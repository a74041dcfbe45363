#include "ngsac/error.hpp"

namespace ngsac {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::DegenerateModel: return "DegenerateModel";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::CheiralityAmbiguous: return "CheiralityAmbiguous";
    case ErrorCode::DegenerateMinimalSet: return "DegenerateMinimalSet";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::InsufficientSupport: return "InsufficientSupport";
    case ErrorCode::ResampleBudgetExceeded: return "ResampleBudgetExceeded";
    case ErrorCode::SetTooSmall: return "SetTooSmall";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NoInliers: return "NoInliers";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace ngsac
