#include "waygraph/error.hpp"

namespace waygraph {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::OriginBlocked: return "OriginBlocked";
    case ErrorCode::EndpointBlocked: return "EndpointBlocked";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::CandidateBlocked: return "CandidateBlocked";
    case ErrorCode::UnreachableEndpoint: return "UnreachableEndpoint";
    case ErrorCode::RefinementDiverged: return "RefinementDiverged";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptyPatch: return "EmptyPatch";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::AlignmentError: return "AlignmentError";
    case ErrorCode::TeleportBlocked: return "TeleportBlocked";
    case ErrorCode::NoWaypoint: return "NoWaypoint";
    case ErrorCode::InsufficientGraph: return "InsufficientGraph";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::Io: return "Io";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::StageFailure: return "StageFailure";
  }
  return "Unknown";
}

}  // namespace waygraph
