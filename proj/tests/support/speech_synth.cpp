// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include "speech_synth.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace fixtures {
namespace {

struct Resonator {
  double a1 = 0, a2 = 0, gain = 1, y1 = 0, y2 = 0;
  void tune(double freq, double bw, double fs) {
    const double r = std::exp(-std::numbers::pi * bw / fs);
    a1 = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq / fs);
    a2 = -r * r;
    gain = 1.0 - r;
  }
  double step(double x) {
    const double y = gain * x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

constexpr std::array<std::array<double, 3>, 6> kVowels{{
    {730, 1090, 2440},  // a
    {270, 2290, 3010},  // i
    {300, 870, 2240},   // u
    {530, 1840, 2480},  // e
    {570, 840, 2410},   // o
    {660, 1720, 2410},  // ae
}};

}  // namespace

std::vector<double> synth_speech(std::uint64_t seed, double duration_s,
                                 int sample_rate_hz, VoiceProfile voice) {
  const double fs = sample_rate_hz;
  const auto total = std::size_t(duration_s * fs);
  std::vector<double> out(total, 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::size_t pos = std::size_t(uni(rng) * 0.3 * fs);
  while (pos < total) {
    const int syllables = 3 + int(uni(rng) * 6);
    const double phrase_f0 = voice.f0_hz * (0.9 + 0.2 * uni(rng));
    for (int s = 0; s < syllables && pos < total; ++s) {
      const double decline = 1.15 - 0.3 * double(s) / syllables;
      const double f0 = phrase_f0 * decline * (0.92 + 0.16 * uni(rng));
      const double syl_len = (0.6 + 0.8 * uni(rng)) / voice.syllable_rate;
      const auto& formants = kVowels[std::size_t(uni(rng) * kVowels.size()) % kVowels.size()];

      // Optional unvoiced onset, overlapping the start of the vowel.
      if (uni(rng) < 0.6) {
        const auto burst = std::size_t((0.03 + 0.05 * uni(rng)) * fs);
        const double centre = 2500.0 + 3000.0 * uni(rng);
        Resonator r;
        r.tune(std::min(centre, fs * 0.45), 1500.0, fs);
        for (std::size_t i = 0; i < burst && pos + i < total; ++i) {
          const double env = std::sin(std::numbers::pi * double(i) / double(burst));
          out[pos + i] += 0.08 * env * r.step(gauss(rng));
        }
      }

      // Voiced nucleus: glottal pulse train, spectral tilt, three formants.
      const auto voiced = std::size_t(syl_len * fs);
      const bool first = s == 0, last = s + 1 == syllables;
      std::array<Resonator, 3> tract;
      for (std::size_t k = 0; k < 3; ++k)
        tract[k].tune(formants[k] * (0.95 + 0.1 * uni(rng)), 60.0 + 40.0 * double(k), fs);
      double phase = 0.0, lp1 = 0.0, lp2 = 0.0, prev = 0.0;
      for (std::size_t i = 0; i < voiced && pos < total; ++i, ++pos) {
        const double t = double(i) / double(voiced);
        const double inst_f0 = f0 * (1.0 + 0.05 * std::sin(2.0 * std::numbers::pi * t));
        phase += inst_f0 / fs;
        double pulse = 0.0;
        if (phase >= 1.0) {
          phase -= 1.0;
          pulse = 1.0;
        }
        lp1 = pulse + 0.97 * lp1;
        lp2 = lp1 + 0.97 * lp2;
        const double radiated = lp2 - prev;
        prev = lp2;
        double y = radiated + 0.02 * gauss(rng);
        for (auto& r : tract) y = r.step(y) * 4.0;
        // Short ramps at phrase edges, a shallow dip between syllables.
        const double edge = std::min(double(i), double(voiced - i)) / (0.025 * fs);
        const double ramp = std::min(1.0, edge);
        const double shape = (first || last) ? ramp : 0.55 + 0.45 * std::sin(std::numbers::pi * t);
        out[pos] += shape * y;
      }
    }
    pos += std::size_t((0.15 + 0.45 * uni(rng)) * fs);
  }

  double energy = 0.0;
  for (double v : out) energy += v * v;
  const double scale = energy > 0 ? voice.rms / std::sqrt(energy / double(total)) : 0.0;
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace fixtures
