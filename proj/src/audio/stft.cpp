// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include "beamrecall/stft.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "beamrecall/error.hpp"

namespace beamrecall {

StftTensor::StftTensor(std::size_t channels, std::size_t frames,
                       StftConfig config, int sample_rate_hz,
                       std::size_t num_samples)
    : channels_(channels),
      frames_(frames),
      config_(config),
      sample_rate_hz_(sample_rate_hz),
      num_samples_(num_samples),
      data_(channels * frames * (config.window_size / 2 + 1)) {}

std::vector<double> hann_periodic(std::size_t size) {
  std::vector<double> w(size);
  for (std::size_t n = 0; n < size; ++n)
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(n) / double(size));
  return w;
}

void validate_stft_config(const StftConfig& config) {
  const auto win = config.window_size;
  const auto hop = config.hop_size;
  if (win < 4 || !std::has_single_bit(win))
    throw Error(ErrorCode::BadConfig, "STFT window must be a power of two >= 4");
  if (hop == 0 || hop > win / 2 || win % hop != 0)
    throw Error(ErrorCode::BadConfig,
                "STFT hop must divide the window and be at most half of it");
}

namespace {

std::size_t front_pad(const StftConfig& c) { return c.window_size - c.hop_size; }

std::size_t frame_count(std::size_t num_samples, const StftConfig& c) {
  const auto hop = c.hop_size;
  return (num_samples + hop - 1) / hop + c.window_size / hop - 1;
}

}  // namespace

StftTensor stft(const audio::MultichannelAudio& audio, StftConfig config) {
  validate_stft_config(config);
  const auto n = audio.num_samples();
  if (n == 0) throw Error(ErrorCode::EmptyTensor, "cannot transform empty audio");

  const auto frames = frame_count(n, config);
  const auto pad = front_pad(config);
  const auto win = config.window_size;
  StftTensor out(audio.num_channels(), frames, config, audio.sample_rate_hz(), n);
  const auto window = hann_periodic(win);
  const RealFft fft(win);

  std::vector<double> buf(win);
  for (std::size_t ch = 0; ch < audio.num_channels(); ++ch) {
    const auto x = audio.channel(ch);
    for (std::size_t f = 0; f < frames; ++f) {
      const auto start = std::ptrdiff_t(f * config.hop_size) - std::ptrdiff_t(pad);
      for (std::size_t k = 0; k < win; ++k) {
        const auto idx = start + std::ptrdiff_t(k);
        buf[k] = (idx >= 0 && std::size_t(idx) < n) ? x[std::size_t(idx)] * window[k] : 0.0;
      }
      fft.forward(buf, out.frame(ch, f));
    }
  }
  return out;
}

audio::Signal istft(const StftTensor& tensor) {
  validate_stft_config(tensor.config());
  if (tensor.num_channels() != 1)
    throw Error(ErrorCode::BadConfig, "istft expects a single-channel tensor");
  const auto win = tensor.window_size();
  const auto hop = tensor.hop_size();
  const auto pad = front_pad(tensor.config());
  const auto padded_len = (tensor.num_frames() - 1) * hop + win;
  const auto window = hann_periodic(win);
  const RealFft fft(win);

  std::vector<double> acc(padded_len, 0.0);
  std::vector<double> norm(padded_len, 0.0);
  std::vector<double> buf(win);
  const double scale = 1.0 / double(win);
  for (std::size_t f = 0; f < tensor.num_frames(); ++f) {
    fft.inverse(tensor.frame(0, f), buf);
    const auto start = f * hop;
    for (std::size_t k = 0; k < win; ++k) {
      acc[start + k] += buf[k] * scale * window[k];
      norm[start + k] += window[k] * window[k];
    }
  }

  audio::Signal out(tensor.num_samples(), 0.0);
  for (std::size_t i = 0; i < out.size() && pad + i < padded_len; ++i) {
    const double d = norm[pad + i];
    out[i] = d > 1e-12 ? acc[pad + i] / d : 0.0;
  }
  return out;
}

}  // namespace beamrecall
