#include "dvk/error.hpp"

namespace dvk {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadDims: return "BadDims";
    case ErrorCode::BadFlags: return "BadFlags";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::TrailingBytes: return "TrailingBytes";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ZeroNormPatch: return "ZeroNormPatch";
    case ErrorCode::AttentionOutOfRange: return "AttentionOutOfRange";
    case ErrorCode::UnsortedVotes: return "UnsortedVotes";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::MissingIndex: return "MissingIndex";
    case ErrorCode::BadIndex: return "BadIndex";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::MissingFrame: return "MissingFrame";
    case ErrorCode::NoFrames: return "NoFrames";
    case ErrorCode::MissingAttention: return "MissingAttention";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateBag: return "DegenerateBag";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::PrototypeSamplingFailed: return "PrototypeSamplingFailed";
    case ErrorCode::DoesNotFit: return "DoesNotFit";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

}  // namespace dvk
