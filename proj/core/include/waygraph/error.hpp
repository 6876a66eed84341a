#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace waygraph {

enum class ErrorCode {
  InvalidInput,
  OriginBlocked,
  EndpointBlocked,
  NoPath,
  GenerationFailed,
  CandidateBlocked,
  UnreachableEndpoint,
  RefinementDiverged,
  OutOfRange,
  EmptyPatch,
  Diverged,
  AlignmentError,
  TeleportBlocked,
  NoWaypoint,
  InsufficientGraph,
  EmptySet,
  Io,
  ChecksumMismatch,
  StageFailure,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. Every failure the API reports carries one of the
/// codes above so callers (and the CLI's exit-code mapping) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace waygraph
