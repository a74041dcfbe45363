#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ngsac {

enum class ErrorCode {
  PreconditionViolation,
  DegenerateModel,
  ZeroVariance,
  CheiralityAmbiguous,
  DegenerateMinimalSet,
  RankDeficient,
  InsufficientSupport,
  ResampleBudgetExceeded,
  SetTooSmall,
  ShapeMismatch,
  VersionMismatch,
  CorruptModel,
  MissingGroundTruth,
  NonFiniteLoss,
  EmptyInput,
  NoInliers,
  ParseError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (the sampler's redraw loop, the trainer's skip logic, the CLI exit
/// status) can branch on the kind of failure without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, const char* message) {
  if (!condition) throw Error(ErrorCode::PreconditionViolation, message);
}

}  // namespace ngsac
