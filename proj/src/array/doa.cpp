// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "beamrecall/array_dsp.hpp"
#include "beamrecall/error.hpp"

namespace beamrecall::array {

DoaEstimate srp_phat(const StftTensor& tensor, const ArrayGeometry& geom,
                     const SrpPhatConfig& config) {
  if (tensor.num_channels() != geom.num_mics())
    throw Error(ErrorCode::DimensionMismatch,
                "tensor channel count does not match the array");
  if (!(config.grid_resolution_deg > 0.0) || config.grid_resolution_deg > 180.0)
    throw Error(ErrorCode::BadConfig, "grid resolution must be in (0, 180]");

  const std::size_t mics = geom.num_mics();
  double power = 0.0;
  for (std::size_t c = 0; c < mics; ++c)
    for (std::size_t f = 0; f < tensor.num_frames(); ++f)
      for (const auto& v : tensor.frame(c, f)) power += std::norm(v);
  power /= double(mics * tensor.num_frames() * tensor.num_bins());
  if (!(power > config.silence_threshold))
    throw Error(ErrorCode::SilentInput, "input energy is below the silence threshold");

  const auto grid_size =
      std::size_t(std::llround(360.0 / config.grid_resolution_deg));
  std::size_t lo_bin = std::size_t(std::ceil(config.min_freq_hz * double(tensor.window_size()) /
                                             tensor.sample_rate_hz()));
  std::size_t hi_bin = std::size_t(std::floor(config.max_freq_hz * double(tensor.window_size()) /
                                              tensor.sample_rate_hz()));
  lo_bin = std::max<std::size_t>(lo_bin, 1);
  hi_bin = std::min(hi_bin, tensor.num_bins() - 1);
  if (lo_bin > hi_bin) throw Error(ErrorCode::BadConfig, "empty SRP-PHAT frequency band");
  const std::size_t band = hi_bin - lo_bin + 1;

  // conj_steer[(g * band + b) * mics + m] = conj(d_m(theta_g, bin lo+b))
  std::vector<Complex> conj_steer(grid_size * band * mics);
  for (std::size_t g = 0; g < grid_size; ++g) {
    const double az = double(g) * config.grid_resolution_deg;
    for (std::size_t b = 0; b < band; ++b) {
      const auto sv = steering_vector(geom, az, tensor.bin_frequency_hz(lo_bin + b),
                                      config.speed_of_sound);
      for (std::size_t m = 0; m < mics; ++m)
        conj_steer[(g * band + b) * mics + m] = std::conj(sv.elements[Eigen::Index(m)]);
    }
  }

  std::vector<double> spectrum(grid_size, 0.0);
  std::vector<Complex> phat(band * mics);
  std::vector<char> usable(band);
  std::size_t terms = 0;
  for (std::size_t f = 0; f < tensor.num_frames(); ++f) {
    for (std::size_t b = 0; b < band; ++b) {
      bool ok = true;
      for (std::size_t m = 0; m < mics; ++m) {
        const Complex x = tensor.at(m, f, lo_bin + b);
        const double mag = std::abs(x);
        if (!(mag > 1e-12)) {
          ok = false;
          break;
        }
        phat[b * mics + m] = x / mag;
      }
      usable[b] = ok;
      terms += ok;
    }
    for (std::size_t g = 0; g < grid_size; ++g) {
      double acc = 0.0;
      const Complex* steer = &conj_steer[g * band * mics];
      for (std::size_t b = 0; b < band; ++b) {
        if (!usable[b]) continue;
        Complex s = 0.0;
        for (std::size_t m = 0; m < mics; ++m) s += phat[b * mics + m] * steer[b * mics + m];
        acc += std::abs(s);
      }
      spectrum[g] += acc;
    }
  }
  if (terms == 0) throw Error(ErrorCode::SilentInput, "no usable time-frequency bins");
  for (auto& v : spectrum) v /= double(terms * mics);

  DoaEstimate est;
  est.grid_resolution_deg = config.grid_resolution_deg;
  est.peaks = pick_peaks(spectrum, config.grid_resolution_deg, config.max_peaks,
                         config.min_separation_deg);
  est.spectrum = std::move(spectrum);
  return est;
}

std::vector<DoaPeak> pick_peaks(std::span<const double> spectrum,
                                double grid_resolution_deg,
                                std::size_t max_peaks,
                                double min_separation_deg) {
  const std::size_t n = spectrum.size();
  std::vector<std::size_t> maxima;
  for (std::size_t i = 0; i < n; ++i) {
    const double prev = spectrum[(i + n - 1) % n];
    const double next = spectrum[(i + 1) % n];
    // >= on one side lets the first sample of a plateau count once.
    if (spectrum[i] > prev && spectrum[i] >= next) maxima.push_back(i);
  }
  std::stable_sort(maxima.begin(), maxima.end(), [&](std::size_t a, std::size_t b) {
    return spectrum[a] > spectrum[b];
  });

  std::vector<DoaPeak> peaks;
  for (std::size_t i : maxima) {
    if (peaks.size() >= max_peaks) break;
    const double az = double(i) * grid_resolution_deg;
    const bool clear = std::all_of(peaks.begin(), peaks.end(), [&](const DoaPeak& p) {
      return angular_distance(p.azimuth_deg, az) >= min_separation_deg;
    });
    if (clear) peaks.push_back({az, spectrum[i]});
  }
  return peaks;
}

std::string spectrum_csv(const DoaEstimate& estimate) {
  std::ostringstream out;
  out.precision(10);
  out << "azimuth_deg,value\n";
  for (std::size_t i = 0; i < estimate.spectrum.size(); ++i)
    out << double(i) * estimate.grid_resolution_deg << ',' << estimate.spectrum[i] << '\n';
  return out.str();
}

}  // namespace beamrecall::array
