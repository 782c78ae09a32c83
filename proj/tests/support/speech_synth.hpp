// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace fixtures {

struct VoiceProfile {
  double f0_hz = 120.0;       // mean pitch
  double syllable_rate = 4.5;  // syllables per second while talking
  double rms = 0.08;          // output level
};

inline constexpr VoiceProfile kLowVoice{110.0, 4.2, 0.08};
inline constexpr VoiceProfile kHighVoice{205.0, 4.8, 0.08};

/// Deterministic speech-like signal: phrases of formant-filtered voiced
/// syllables with noise-burst consonants and pauses between phrases.
std::vector<double> synth_speech(std::uint64_t seed, double duration_s,
                                 int sample_rate_hz, VoiceProfile voice);

}  // namespace fixtures
