#pragma once

#include <stdexcept>
#include <string>

namespace dvk {

enum class ErrorCode {
  Io,
  BadMagic,
  BadDims,
  BadFlags,
  Truncated,
  TrailingBytes,
  NonFiniteValue,
  ZeroNormPatch,
  AttentionOutOfRange,
  UnsortedVotes,
  BadConfig,
  MissingIndex,
  BadIndex,
  DimMismatch,
  MissingFrame,
  NoFrames,
  MissingAttention,
  TooFewPoints,
  DegenerateBag,
  ZeroNorm,
  EmptyBatch,
  Diverged,
  PrototypeSamplingFailed,
  DoesNotFit,
  UnknownClass,
  InvalidArgument,
};

const char* to_string(ErrorCode code);

/// Structured failure carried by every fallible operation in the toolkit.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dvk
