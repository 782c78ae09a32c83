// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace beamrecall::audio {

/// Mono signal. Audio travels through the pipeline as double; integer PCM
/// only exists at the file boundary.
using Signal = std::vector<double>;

/// Sample-aligned channels sharing one sample rate. Immutable once built.
class MultichannelAudio {
 public:
  MultichannelAudio() = default;
  /// Throws Error(BadConfig) if the channel set is empty, ragged, or the rate
  /// is not positive.
  MultichannelAudio(std::vector<Signal> channels, int sample_rate_hz);

  static MultichannelAudio mono(Signal samples, int sample_rate_hz);

  std::size_t num_channels() const { return channels_.size(); }
  std::size_t num_samples() const {
    return channels_.empty() ? 0 : channels_.front().size();
  }
  int sample_rate_hz() const { return sample_rate_hz_; }
  double duration_s() const {
    return sample_rate_hz_ > 0 ? double(num_samples()) / sample_rate_hz_ : 0.0;
  }

  std::span<const double> channel(std::size_t index) const {
    return channels_.at(index);
  }
  const std::vector<Signal>& channels() const { return channels_; }

 private:
  std::vector<Signal> channels_;
  int sample_rate_hz_ = 0;
};

enum class WavEncoding { Pcm16, Pcm24, Pcm32, Float32 };

int bits_per_sample(WavEncoding encoding);

struct WavWriteReport {
  std::size_t clipped_samples = 0;
};

MultichannelAudio decode_wav(std::span<const std::uint8_t> bytes);
MultichannelAudio read_wav(const std::filesystem::path& path);

/// Samples outside [-1, 1] are hard-clipped and counted in the report.
std::vector<std::uint8_t> encode_wav(const MultichannelAudio& audio,
                                     WavEncoding encoding,
                                     WavWriteReport* report = nullptr);
WavWriteReport write_wav(const MultichannelAudio& audio,
                         const std::filesystem::path& path,
                         WavEncoding encoding);

/// Sample-accurate slice; `end_s` is clamped to the duration.
MultichannelAudio slice_audio(const MultichannelAudio& audio, double start_s,
                              double end_s);

}  // namespace beamrecall::audio
