// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <set>
#include <sstream>

#include "beamrecall/array_dsp.hpp"
#include "beamrecall/error.hpp"

namespace beamrecall::array {

audio::Signal apply_beamformer(const StftTensor& tensor,
                               const BeamformerWeights& weights) {
  if (weights.weights_per_bin.size() != tensor.num_bins())
    throw Error(ErrorCode::DimensionMismatch, "weights do not cover every STFT bin");
  for (const auto& w : weights.weights_per_bin)
    if (std::size_t(w.size()) != tensor.num_channels())
      throw Error(ErrorCode::DimensionMismatch,
                  "weight vector length differs from channel count");

  StftTensor out(1, tensor.num_frames(), tensor.config(), tensor.sample_rate_hz(),
                 tensor.num_samples());
  const auto channels = tensor.num_channels();
  for (std::size_t f = 0; f < tensor.num_frames(); ++f) {
    for (std::size_t b = 0; b < tensor.num_bins(); ++b) {
      const auto& w = weights.weights_per_bin[b];
      Complex y = 0.0;
      for (std::size_t c = 0; c < channels; ++c)
        y += std::conj(w[Eigen::Index(c)]) * tensor.at(c, f, b);
      out.at(0, f, b) = y;
    }
  }
  // The DC and Nyquist bins of a real signal must stay real for c2r.
  for (std::size_t f = 0; f < out.num_frames(); ++f) {
    out.at(0, f, 0).imag(0.0);
    out.at(0, f, out.num_bins() - 1).imag(0.0);
  }
  return istft(out);
}

std::vector<BeamPatternPoint> beam_pattern(const BeamformerWeights& weights,
                                           const ArrayGeometry& geom,
                                           double freq_hz,
                                           double grid_resolution_deg,
                                           double speed_of_sound) {
  const double nyquist = weights.sample_rate_hz / 2.0;
  if (!(freq_hz >= 0.0) || freq_hz > nyquist || weights.weights_per_bin.empty())
    throw Error(ErrorCode::BinOutOfRange, "frequency outside the weight bins");
  const auto bin = std::size_t(
      std::llround(freq_hz * double(weights.window_size) / weights.sample_rate_hz));
  if (bin >= weights.weights_per_bin.size())
    throw Error(ErrorCode::BinOutOfRange, "frequency outside the weight bins");
  if (!(grid_resolution_deg > 0.0))
    throw Error(ErrorCode::BadConfig, "grid resolution must be positive");

  const auto& w = weights.weights_per_bin[bin];
  const auto points = std::size_t(std::llround(360.0 / grid_resolution_deg));
  std::vector<BeamPatternPoint> out;
  out.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double az = double(i) * grid_resolution_deg;
    const auto d = steering_vector(geom, az, freq_hz, speed_of_sound);
    out.push_back({az, std::abs(w.dot(d.elements))});
  }
  return out;
}

std::vector<DirectionalStream> separate_streams(
    const audio::MultichannelAudio& audio, const ArrayGeometry& geom,
    std::span<const StreamDirection> directions, const SeparationConfig& config) {
  if (directions.empty())
    throw Error(ErrorCode::BadConfig, "at least one stream direction is required");
  if (audio.num_channels() != geom.num_mics())
    throw Error(ErrorCode::ChannelMismatch,
                "recording has " + std::to_string(audio.num_channels()) +
                    " channels but the array has " + std::to_string(geom.num_mics()));
  std::set<std::string> labels;
  for (std::size_t i = 0; i < directions.size(); ++i) {
    if (directions[i].label.empty())
      throw Error(ErrorCode::BadConfig, "stream label must not be empty");
    if (!labels.insert(directions[i].label).second)
      throw Error(ErrorCode::DuplicateLabel, "duplicate stream label '" + directions[i].label + "'");
    for (std::size_t j = 0; j < i; ++j)
      if (angular_distance(directions[i].azimuth_deg, directions[j].azimuth_deg) <
          config.min_separation_deg)
        throw Error(ErrorCode::BadConfig, "stream azimuths '" + directions[j].label +
                                              "' and '" + directions[i].label +
                                              "' are closer than the minimum separation");
  }

  const auto tensor = stft(audio, config.stft);
  const auto cov = estimate_covariance(tensor, config.loading_factor);

  std::vector<DirectionalStream> streams;
  for (const auto& dir : directions) {
    const auto steer = steering_per_bin(geom, dir.azimuth_deg, audio.sample_rate_hz(),
                                        config.stft.window_size, config.speed_of_sound);
    auto w = mvdr_weights(cov, steer, dir.azimuth_deg, audio.sample_rate_hz(),
                          config.stft.window_size);
    auto samples = apply_beamformer(tensor, w);
    streams.push_back({dir.label, wrap_degrees(dir.azimuth_deg), std::move(samples),
                       audio.sample_rate_hz(), std::move(w)});
  }
  return streams;
}

std::string to_csv(std::span<const BeamPatternPoint> points) {
  std::ostringstream out;
  out.precision(10);
  out << "azimuth_deg,value\n";
  for (const auto& p : points) out << p.azimuth_deg << ',' << p.gain << '\n';
  return out.str();
}

}  // namespace beamrecall::array
