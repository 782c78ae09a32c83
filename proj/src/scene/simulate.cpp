// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "beamrecall/error.hpp"
#include "beamrecall/fft.hpp"
#include "beamrecall/scene.hpp"

namespace beamrecall::scene {

audio::Signal fractional_delay(std::span<const double> signal, double tau_s,
                               int sample_rate_hz) {
  if (!(std::abs(tau_s) < 0.01))
    throw Error(ErrorCode::BadConfig, "delay must be under 10 ms");
  if (signal.empty()) return {};
  if (tau_s == 0.0) return {signal.begin(), signal.end()};

  // Pad both sides so the shifted signal never wraps onto itself.
  const auto margin = std::size_t(std::ceil(0.01 * sample_rate_hz)) + 16;
  const std::size_t n = std::bit_ceil(signal.size() + 2 * margin);
  std::vector<double> buf(n, 0.0);
  std::copy(signal.begin(), signal.end(), buf.begin() + std::ptrdiff_t(margin));

  const RealFft fft(n);
  std::vector<Complex> spec(fft.num_bins());
  fft.forward(buf, spec);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = double(k) * sample_rate_hz / double(n);
    const double phase = -2.0 * std::numbers::pi * f * tau_s;
    if (k == 0 || k == n / 2)
      spec[k] *= std::cos(phase);  // real-valued bins
    else
      spec[k] *= std::polar(1.0, phase);
  }
  fft.inverse(spec, buf);

  audio::Signal out(signal.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = buf[margin + i] / double(n);
  return out;
}

std::size_t center_mic(const array::ArrayGeometry& geom) {
  std::size_t best = 0;
  double best_r = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < geom.num_mics(); ++m) {
    const auto& p = geom.mics()[m];
    const double r = p.x * p.x + p.y * p.y + p.z * p.z;
    if (r < best_r) {
      best_r = r;
      best = m;
    }
  }
  return best;
}

SimulatedScene simulate_scene(const SceneSpec& spec) {
  if (spec.sources.empty())
    throw Error(ErrorCode::BadConfig, "scene needs at least one source");
  if (spec.sample_rate_hz <= 0)
    throw Error(ErrorCode::BadConfig, "scene sample rate must be positive");

  std::size_t length = 0;
  for (const auto& s : spec.sources) length = std::max(length, s.signal.size());
  if (length == 0) throw Error(ErrorCode::BadConfig, "scene sources are empty");

  const auto& geom = spec.geometry;
  std::vector<audio::Signal> channels(geom.num_mics(), audio::Signal(length, 0.0));
  std::vector<audio::Signal> refs;
  for (const auto& src : spec.sources) {
    audio::Signal padded(length, 0.0);
    for (std::size_t i = 0; i < src.signal.size(); ++i) padded[i] = src.gain * src.signal[i];
    const double az = src.azimuth_deg * std::numbers::pi / 180.0;
    const double ux = std::cos(az), uy = std::sin(az);
    for (std::size_t m = 0; m < geom.num_mics(); ++m) {
      const auto& p = geom.mics()[m];
      const double lead = (p.x * ux + p.y * uy) / spec.speed_of_sound;
      const auto delayed = fractional_delay(padded, -lead, spec.sample_rate_hz);
      for (std::size_t i = 0; i < length; ++i) channels[m][i] += delayed[i];
    }
    refs.push_back(std::move(padded));
  }

  SimulatedScene out{{}, std::move(refs), {}};
  if (spec.noise_snr_db) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<audio::Signal> noise(geom.num_mics(), audio::Signal(length));
    for (auto& ch : noise)
      for (auto& v : ch) v = gauss(rng);

    const auto c = center_mic(geom);
    double sig_e = 0.0, noise_e = 0.0;
    for (std::size_t i = 0; i < length; ++i) {
      sig_e += channels[c][i] * channels[c][i];
      noise_e += noise[c][i] * noise[c][i];
    }
    const double scale = std::sqrt(sig_e / (noise_e * std::pow(10.0, *spec.noise_snr_db / 10.0)));
    for (std::size_t m = 0; m < geom.num_mics(); ++m)
      for (std::size_t i = 0; i < length; ++i) channels[m][i] += scale * noise[m][i];
    out.center_noise = noise[c];
    for (auto& v : out.center_noise) v *= scale;
  }
  out.mixture = audio::MultichannelAudio(std::move(channels), spec.sample_rate_hz);
  return out;
}

}  // namespace beamrecall::scene
