// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace beamrecall {

enum class ErrorCode {
  MalformedWav,
  UnsupportedEncoding,
  IoFailure,
  BadConfig,
  EmptyInterval,
  EmptyTensor,
  SilentInput,
  SingularCovariance,
  DimensionMismatch,
  BinOutOfRange,
  DuplicateLabel,
  RateMismatch,
  ZeroReference,
  TooShort,
  UnsupportedRate,
  BackendUnreachable,
  MalformedResponse,
  FixtureMissing,
  ProviderUnreachable,
  NoTokens,
  DuplicateId,
  EmptyIndex,
  CorruptFile,
  NoTopic,
  EmptyAttended,
  UnknownChunk,
  MixedStreams,
  ChannelMismatch,
  UnknownSession,
  BindFailure,
  UnknownDirection,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure surfaced by the library. `stage` names
/// the pipeline step that failed and is empty for standalone calls.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string stage = {})
      : std::runtime_error(message), code_(code), stage_(std::move(stage)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }

  /// Copy of this error re-tagged with a pipeline stage.
  Error with_stage(std::string stage) const {
    return Error(code_, what(), std::move(stage));
  }

 private:
  ErrorCode code_;
  std::string stage_;
};

}  // namespace beamrecall
