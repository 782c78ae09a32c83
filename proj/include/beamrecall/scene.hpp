// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "beamrecall/array_dsp.hpp"
#include "beamrecall/audio.hpp"

namespace beamrecall::scene {

struct SceneSource {
  std::string label;
  double azimuth_deg = 0.0;
  audio::Signal signal;
  double gain = 1.0;
};

struct SceneSpec {
  std::vector<SceneSource> sources;
  array::ArrayGeometry geometry = array::uma8_geometry();
  /// Spatially white noise, scaled to this SNR at the center mic.
  std::optional<double> noise_snr_db;
  std::uint64_t seed = 0;
  int sample_rate_hz = 16000;
  double speed_of_sound = array::kSpeedOfSound;
};

struct SimulatedScene {
  audio::MultichannelAudio mixture;
  /// Per source: gain * signal as observed at the array origin.
  std::vector<audio::Signal> references;
  /// Noise added to the center mic, empty when noise is off.
  audio::Signal center_noise;
};

/// Band-limited delay by phase rotation exp(-i 2 pi f tau) over the
/// zero-padded spectrum of the whole signal. Negative tau advances.
audio::Signal fractional_delay(std::span<const double> signal, double tau_s,
                               int sample_rate_hz);

/// Anechoic far-field mixture. Mics nearer a source receive it earlier by
/// (p . u) / c, matching the steering-vector sign convention.
SimulatedScene simulate_scene(const SceneSpec& spec);

/// Index of the mic closest to the array origin.
std::size_t center_mic(const array::ArrayGeometry& geom);

/// Parses a scene document:
///   {"sample_rate_hz": 16000, "geometry": "uma8", "seed": 1,
///    "noise_snr_db": 10,
///    "sources": [{"path": "a.wav", "azimuth_deg": 45, "gain": 1,
///                 "label": "right"}]}
/// Relative source paths resolve against `base_dir`. Mono WAVs only.
SceneSpec load_scene_spec(const std::string& json_text,
                          const std::filesystem::path& base_dir);

inline constexpr double kSiSdrCapDb = 60.0;

/// Scale-invariant SDR in dB, clamped to [-60, 60].
double si_sdr(std::span<const double> reference, std::span<const double> estimate);

/// Short-time objective intelligibility (15 third-octave bands from 150 Hz,
/// 384 ms segments, 10 kHz internal rate). Accepts 16 kHz or 10 kHz input.
double stoi(std::span<const double> reference, std::span<const double> estimate,
            int sample_rate_hz);

/// Polyphase resampler with a Kaiser-windowed sinc (beta 5, 10 zero
/// crossings of the slower rate per side). Output length ceil(n * up / down).
audio::Signal resample_poly(std::span<const double> x, int up, int down);

struct StreamMetrics {
  std::string label;
  double azimuth_deg = 0.0;
  double stoi_before = 0.0;
  double stoi_after = 0.0;
  double si_sdr_before_db = 0.0;
  double si_sdr_after_db = 0.0;
};

struct MetricReport {
  std::vector<StreamMetrics> streams;
};

/// Simulates `spec`, steers one MVDR beam at every source and scores each
/// beam against the center-mic channel.
MetricReport evaluate_scene(const SceneSpec& spec,
                            const array::SeparationConfig& config = {});

std::string to_json(const MetricReport& report);

}  // namespace beamrecall::scene
