// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "beamrecall/error.hpp"
#include "beamrecall/stft.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace beamrecall;
using audio::MultichannelAudio;
using audio::Signal;

TEST_CASE("zero signal gives an all-zero tensor and back") {
  const auto x = MultichannelAudio::mono(Signal(5000, 0.0), 16000);
  const auto t = stft(x);
  for (std::size_t f = 0; f < t.num_frames(); ++f)
    for (const auto& v : t.frame(0, f)) CHECK(std::abs(v) == 0.0);
  for (double v : istft(t)) CHECK(v == 0.0);
}

TEST_CASE("tensor shape") {
  const auto x = MultichannelAudio({Signal(1000, 0.1), Signal(1000, 0.2)}, 16000);
  const auto t = stft(x);
  CHECK(t.num_bins() == 257);
  CHECK(t.num_channels() == 2);
  // ceil(1000/256) + 512/256 - 1
  CHECK(t.num_frames() == 5);
  CHECK(t.num_samples() == 1000);
}

TEST_CASE("round trip reconstructs random signals") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::size_t> len(300, 20000);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = oracle::random_signal(len(rng), rng);
    const auto y = istft(stft(MultichannelAudio::mono(x, 16000)));
    REQUIRE(y.size() == x.size());
    CHECK(oracle::rms_diff(x, y) < 1e-6);
  }
}

TEST_CASE("round trip with other COLA configurations") {
  std::mt19937_64 rng(7);
  const auto x = oracle::random_signal(4000, rng);
  for (StftConfig cfg : {StftConfig{256, 64}, StftConfig{1024, 512}, StftConfig{64, 16}}) {
    const auto y = istft(stft(MultichannelAudio::mono(x, 16000), cfg));
    CHECK(oracle::rms_diff(x, y) < 1e-6);
  }
}

TEST_CASE("1 kHz sinusoid concentrates in bin 32") {
  Signal x(16000);
  for (std::size_t n = 0; n < x.size(); ++n)
    x[n] = std::sin(2.0 * std::numbers::pi * 1000.0 * double(n) / 16000.0);
  const auto t = stft(MultichannelAudio::mono(x, 16000));
  const std::size_t f = 10;  // interior frame

  // Oracle: direct DFT of the same windowed frame.
  const auto w = hann_periodic(512);
  std::vector<double> frame(512);
  const std::size_t start = f * 256 - 256;
  for (std::size_t k = 0; k < 512; ++k) frame[k] = x[start + k] * w[k];
  double total = 0.0, near = 0.0;
  for (std::size_t b = 0; b < 257; ++b) {
    const auto ref = oracle::dft_bin(frame, b);
    CHECK(std::abs(ref - t.at(0, f, b)) < 1e-9);
    const double e = std::norm(ref);
    total += e;
    if (b >= 31 && b <= 33) near += e;
  }
  CHECK(near / total >= 0.95);
}

TEST_CASE("single nonzero frame stays local") {
  const auto x = MultichannelAudio::mono(Signal(4096, 0.0), 16000);
  auto t = stft(x);
  t.at(0, 6, 10) = Complex(100.0, 0.0);
  const auto y = istft(t);
  // Frame 6 covers padded samples [1536, 2048), i.e. real samples [1280, 1792).
  double outside = 0.0, inside = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (i >= 1280 && i < 1792)
      inside += std::abs(y[i]);
    else
      outside += std::abs(y[i]);
  }
  CHECK(inside > 0.0);
  CHECK(outside == 0.0);
}

TEST_CASE("bad configurations are rejected") {
  const auto x = MultichannelAudio::mono(Signal(1000, 0.0), 16000);
  for (StftConfig cfg : {StftConfig{500, 250}, StftConfig{512, 200}, StftConfig{512, 512},
                         StftConfig{512, 0}}) {
    CHECK_THROWS_AS(stft(x, cfg), Error);
  }
  auto t = stft(MultichannelAudio({Signal(600, 0.0), Signal(600, 0.0)}, 16000));
  CHECK_THROWS_AS(istft(t), Error);
}
