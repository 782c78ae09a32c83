// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "beamrecall/audio.hpp"
#include "beamrecall/fft.hpp"

namespace beamrecall {

struct StftConfig {
  std::size_t window_size = 512;
  std::size_t hop_size = 256;
};

/// Complex spectra indexed [channel][frame][bin], stored contiguously.
///
/// The input is preceded by window - hop zeros; frame f covers samples
/// [f*hop, f*hop + window) of that padded signal, so every real sample is
/// covered by exactly window/hop frames and reconstructs exactly.
class StftTensor {
 public:
  StftTensor() = default;
  StftTensor(std::size_t channels, std::size_t frames, StftConfig config,
             int sample_rate_hz, std::size_t num_samples);

  std::size_t num_channels() const { return channels_; }
  std::size_t num_frames() const { return frames_; }
  std::size_t num_bins() const { return config_.window_size / 2 + 1; }
  std::size_t window_size() const { return config_.window_size; }
  std::size_t hop_size() const { return config_.hop_size; }
  const StftConfig& config() const { return config_; }
  int sample_rate_hz() const { return sample_rate_hz_; }
  /// Length of the signal the tensor was computed from.
  std::size_t num_samples() const { return num_samples_; }
  std::string window_kind() const { return "hann-periodic"; }

  double bin_frequency_hz(std::size_t bin) const {
    return double(bin) * sample_rate_hz_ / double(config_.window_size);
  }

  Complex& at(std::size_t ch, std::size_t frame, std::size_t bin) {
    return data_[(ch * frames_ + frame) * num_bins() + bin];
  }
  const Complex& at(std::size_t ch, std::size_t frame, std::size_t bin) const {
    return data_[(ch * frames_ + frame) * num_bins() + bin];
  }
  std::span<Complex> frame(std::size_t ch, std::size_t f) {
    return {data_.data() + (ch * frames_ + f) * num_bins(), num_bins()};
  }
  std::span<const Complex> frame(std::size_t ch, std::size_t f) const {
    return {data_.data() + (ch * frames_ + f) * num_bins(), num_bins()};
  }

 private:
  std::size_t channels_ = 0;
  std::size_t frames_ = 0;
  StftConfig config_;
  int sample_rate_hz_ = 0;
  std::size_t num_samples_ = 0;
  std::vector<Complex> data_;
};

/// Periodic Hann window of the given length.
std::vector<double> hann_periodic(std::size_t size);

/// Throws Error(BadConfig) unless the window is a power of two and the hop
/// divides it.
void validate_stft_config(const StftConfig& config);

StftTensor stft(const audio::MultichannelAudio& audio, StftConfig config = {});

/// Weighted overlap-add synthesis of a single-channel tensor, normalized by
/// the summed squared window. Returns num_samples() samples.
audio::Signal istft(const StftTensor& tensor);

}  // namespace beamrecall
