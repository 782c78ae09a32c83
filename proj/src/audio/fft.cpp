// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include "beamrecall/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace beamrecall {
namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

// FFTW planning is not thread-safe; execution with new-array calls is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

PlanPair plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(plan_mutex());
  if (auto it = cache.find(n); it != cache.end()) return it->second;

  std::vector<double> real(n);
  std::vector<fftw_complex> spec(n / 2 + 1);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p{
      fftw_plan_dft_r2c_1d(int(n), real.data(), spec.data(), flags),
      fftw_plan_dft_c2r_1d(int(n), spec.data(), real.data(),
                           flags | FFTW_DESTROY_INPUT),
  };
  if (!p.forward || !p.inverse) throw std::runtime_error("fftw planning failed");
  cache.emplace(n, p);
  return p;
}

}  // namespace

RealFft::RealFft(std::size_t size) : size_(size) {
  if (size == 0) throw std::invalid_argument("fft size must be positive");
  auto p = plans_for(size);
  forward_plan_ = p.forward;
  inverse_plan_ = p.inverse;
}

void RealFft::forward(std::span<const double> in, std::span<Complex> out) const {
  if (in.size() != size_ || out.size() != num_bins())
    throw std::invalid_argument("RealFft::forward size mismatch");
  // r2c leaves its input untouched; the cast only satisfies the C signature.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_),
                       const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::inverse(std::span<const Complex> in, std::span<double> out) const {
  if (in.size() != num_bins() || out.size() != size_)
    throw std::invalid_argument("RealFft::inverse size mismatch");
  std::vector<Complex> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                       reinterpret_cast<fftw_complex*>(scratch.data()),
                       out.data());
}

}  // namespace beamrecall
