// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "beamrecall/error.hpp"
#include "beamrecall/fft.hpp"
#include "beamrecall/scene.hpp"

namespace beamrecall::scene {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// STOI constants.
constexpr int kStoiRate = 10000;
constexpr std::size_t kFrameLen = 256;
constexpr std::size_t kHop = 128;
constexpr std::size_t kFftSize = 512;
constexpr std::size_t kNumBands = 15;
constexpr double kMinFreq = 150.0;
constexpr std::size_t kSegmentFrames = 30;
constexpr double kBetaDb = -15.0;
constexpr double kDynamicRangeDb = 40.0;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Symmetric Hann of length n without its zero end points.
std::vector<double> stoi_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i + 1) / double(n + 1));
  return w;
}

double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= (x / (2.0 * k)) * (x / (2.0 * k));
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

// Drops reference frames more than 40 dB below the loudest one, from both
// signals, and overlap-adds what remains.
void remove_silent_frames(std::span<const double> x, std::span<const double> y,
                          std::vector<double>& x_out, std::vector<double>& y_out) {
  const auto w = stoi_window(kFrameLen);
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i + kFrameLen <= x.size(); i += kHop) starts.push_back(i);

  std::vector<double> energy(starts.size());
  for (std::size_t f = 0; f < starts.size(); ++f) {
    double e = 0.0;
    for (std::size_t k = 0; k < kFrameLen; ++k) {
      const double v = w[k] * x[starts[f] + k];
      e += v * v;
    }
    energy[f] = 20.0 * std::log10(std::sqrt(e) + kEps);
  }
  const double loudest = energy.empty() ? 0.0 : *std::max_element(energy.begin(), energy.end());

  std::vector<std::size_t> kept;
  for (std::size_t f = 0; f < starts.size(); ++f)
    if (loudest - kDynamicRangeDb - energy[f] < 0.0) kept.push_back(starts[f]);

  const std::size_t len = kept.empty() ? 0 : (kept.size() - 1) * kHop + kFrameLen;
  x_out.assign(len, 0.0);
  y_out.assign(len, 0.0);
  for (std::size_t j = 0; j < kept.size(); ++j)
    for (std::size_t k = 0; k < kFrameLen; ++k) {
      x_out[j * kHop + k] += w[k] * x[kept[j] + k];
      y_out[j * kHop + k] += w[k] * y[kept[j] + k];
    }
}

struct BandMatrix {
  // [band] -> [lo, hi) bin range
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
};

BandMatrix third_octave_bands() {
  const std::size_t bins = kFftSize / 2 + 1;
  auto nearest_bin = [&](double freq) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < bins; ++b) {
      const double f = double(b) * kStoiRate / double(kFftSize);
      const double d = (f - freq) * (f - freq);
      if (d < best_d) {
        best_d = d;
        best = b;
      }
    }
    return best;
  };
  BandMatrix m;
  for (std::size_t k = 0; k < kNumBands; ++k) {
    const double lo = kMinFreq * std::pow(2.0, (2.0 * double(k) - 1.0) / 6.0);
    const double hi = kMinFreq * std::pow(2.0, (2.0 * double(k) + 1.0) / 6.0);
    m.ranges.emplace_back(nearest_bin(lo), nearest_bin(hi));
  }
  return m;
}

// [band][frame] third-octave magnitudes.
std::vector<std::vector<double>> band_envelopes(std::span<const double> x,
                                                const BandMatrix& bands) {
  const auto w = stoi_window(kFrameLen);
  const RealFft fft(kFftSize);
  std::vector<double> buf(kFftSize, 0.0);
  std::vector<Complex> spec(fft.num_bins());

  std::vector<std::vector<double>> env(kNumBands);
  // Frames start at 0, hop, ... strictly before len - frame_len.
  for (std::size_t start = 0; start + kFrameLen < x.size(); start += kHop) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t k = 0; k < kFrameLen; ++k) buf[k] = w[k] * x[start + k];
    fft.forward(buf, spec);
    for (std::size_t j = 0; j < kNumBands; ++j) {
      double e = 0.0;
      for (std::size_t b = bands.ranges[j].first; b < bands.ranges[j].second; ++b)
        e += std::norm(spec[b]);
      env[j].push_back(std::sqrt(e));
    }
  }
  return env;
}

}  // namespace

double si_sdr(std::span<const double> reference, std::span<const double> estimate) {
  if (reference.size() != estimate.size())
    throw Error(ErrorCode::DimensionMismatch, "si_sdr inputs differ in length");
  const double ref_energy = dot(reference, reference);
  if (!(ref_energy > 0.0)) throw Error(ErrorCode::ZeroReference, "reference signal is zero");

  const double alpha = dot(estimate, reference) / ref_energy;
  double target = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = alpha * reference[i];
    const double r = estimate[i] - t;
    target += t * t;
    residual += r * r;
  }
  if (residual <= target * std::pow(10.0, -kSiSdrCapDb / 10.0)) return kSiSdrCapDb;
  if (target <= residual * std::pow(10.0, -kSiSdrCapDb / 10.0)) return -kSiSdrCapDb;
  return 10.0 * std::log10(target / residual);
}

audio::Signal resample_poly(std::span<const double> x, int up, int down) {
  if (up <= 0 || down <= 0) throw Error(ErrorCode::BadConfig, "resample ratio must be positive");
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return {x.begin(), x.end()};

  const int max_rate = std::max(up, down);
  const int half_len = 10 * max_rate;
  const double cutoff = 1.0 / max_rate;  // relative to the upsampled Nyquist
  const double beta = 5.0;
  std::vector<double> h(std::size_t(2 * half_len + 1));
  double sum = 0.0;
  for (int i = 0; i <= 2 * half_len; ++i) {
    const double t = double(i - half_len);
    const double arg = std::numbers::pi * cutoff * t;
    const double sinc = t == 0.0 ? 1.0 : std::sin(arg) / arg;
    const double r = t / half_len;
    const double kaiser = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / bessel_i0(beta);
    h[std::size_t(i)] = cutoff * sinc * kaiser;
    sum += h[std::size_t(i)];
  }
  for (auto& v : h) v *= double(up) / sum;

  const auto n = std::int64_t(x.size());
  const auto out_len = (n * up + down - 1) / down;
  audio::Signal y(std::size_t(out_len), 0.0);
  for (std::int64_t k = 0; k < out_len; ++k) {
    // Output k sits at upsampled index k*down; input n sits at n*up.
    const std::int64_t center = k * down;
    const std::int64_t n_lo = std::max<std::int64_t>(0, (center - half_len + up - 1) / up);
    const std::int64_t n_hi = std::min<std::int64_t>(n - 1, (center + half_len) / up);
    double acc = 0.0;
    for (std::int64_t i = n_lo; i <= n_hi; ++i)
      acc += x[std::size_t(i)] * h[std::size_t(center - i * up + half_len)];
    y[std::size_t(k)] = acc;
  }
  return y;
}

double stoi(std::span<const double> reference, std::span<const double> estimate,
            int sample_rate_hz) {
  if (reference.size() != estimate.size())
    throw Error(ErrorCode::DimensionMismatch, "stoi inputs differ in length");
  audio::Signal x, y;
  if (sample_rate_hz == 16000) {
    x = resample_poly(reference, 5, 8);
    y = resample_poly(estimate, 5, 8);
  } else if (sample_rate_hz == kStoiRate) {
    x.assign(reference.begin(), reference.end());
    y.assign(estimate.begin(), estimate.end());
  } else {
    throw Error(ErrorCode::UnsupportedRate,
                "stoi expects 16 kHz input, got " + std::to_string(sample_rate_hz));
  }

  std::vector<double> xs, ys;
  remove_silent_frames(x, y, xs, ys);

  static const BandMatrix bands = third_octave_bands();
  const auto x_env = band_envelopes(xs, bands);
  const auto y_env = band_envelopes(ys, bands);
  const std::size_t frames = x_env.front().size();
  if (frames < kSegmentFrames)
    throw Error(ErrorCode::TooShort, "stoi needs at least 384 ms of non-silent speech");

  const double clip = std::pow(10.0, -kBetaDb / 20.0);
  double total = 0.0;
  std::size_t count = 0;
  std::vector<double> xv(kSegmentFrames), yv(kSegmentFrames);
  for (std::size_t end = kSegmentFrames; end <= frames; ++end) {
    const std::size_t begin = end - kSegmentFrames;
    for (std::size_t j = 0; j < kNumBands; ++j) {
      double xn = 0.0, yn = 0.0;
      for (std::size_t m = 0; m < kSegmentFrames; ++m) {
        xv[m] = x_env[j][begin + m];
        yv[m] = y_env[j][begin + m];
        xn += xv[m] * xv[m];
        yn += yv[m] * yv[m];
      }
      const double scale = std::sqrt(xn) / (std::sqrt(yn) + kEps);
      for (std::size_t m = 0; m < kSegmentFrames; ++m)
        yv[m] = std::min(yv[m] * scale, xv[m] * (1.0 + clip));

      const double xm = std::accumulate(xv.begin(), xv.end(), 0.0) / kSegmentFrames;
      const double ym = std::accumulate(yv.begin(), yv.end(), 0.0) / kSegmentFrames;
      double xx = 0.0, yy = 0.0, xy = 0.0;
      for (std::size_t m = 0; m < kSegmentFrames; ++m) {
        const double a = xv[m] - xm, b = yv[m] - ym;
        xx += a * a;
        yy += b * b;
        xy += a * b;
      }
      total += xy / ((std::sqrt(xx) + kEps) * (std::sqrt(yy) + kEps));
      ++count;
    }
  }
  return total / double(count);
}

}  // namespace beamrecall::scene
