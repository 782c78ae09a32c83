// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include "beamrecall/error.hpp"

namespace beamrecall {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedWav: return "MalformedWav";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::EmptyInterval: return "EmptyInterval";
    case ErrorCode::EmptyTensor: return "EmptyTensor";
    case ErrorCode::SilentInput: return "SilentInput";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BinOutOfRange: return "BinOutOfRange";
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::RateMismatch: return "RateMismatch";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::UnsupportedRate: return "UnsupportedRate";
    case ErrorCode::BackendUnreachable: return "BackendUnreachable";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::FixtureMissing: return "FixtureMissing";
    case ErrorCode::ProviderUnreachable: return "ProviderUnreachable";
    case ErrorCode::NoTokens: return "NoTokens";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::NoTopic: return "NoTopic";
    case ErrorCode::EmptyAttended: return "EmptyAttended";
    case ErrorCode::UnknownChunk: return "UnknownChunk";
    case ErrorCode::MixedStreams: return "MixedStreams";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::UnknownDirection: return "UnknownDirection";
  }
  return "Unknown";
}

}  // namespace beamrecall
