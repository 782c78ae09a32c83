// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace beamrecall {

using Complex = std::complex<double>;

/// Real-input FFT of a fixed length backed by FFTW. Plans are shared and
/// cached per size; execution is thread-safe.
class RealFft {
 public:
  explicit RealFft(std::size_t size);

  std::size_t size() const { return size_; }
  std::size_t num_bins() const { return size_ / 2 + 1; }

  /// `in` has size() samples, `out` has num_bins() values.
  void forward(std::span<const double> in, std::span<Complex> out) const;
  /// Unnormalized inverse: inverse(forward(x)) == size() * x.
  void inverse(std::span<const Complex> in, std::span<double> out) const;

 private:
  std::size_t size_;
  void* forward_plan_;
  void* inverse_plan_;
};

}  // namespace beamrecall
