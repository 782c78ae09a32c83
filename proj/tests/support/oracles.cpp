// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unistd.h>

namespace oracle {

cd dft_bin(std::span<const double> x, std::size_t k) {
  cd acc = 0;
  const double n_total = double(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double ang = -2.0 * std::numbers::pi * double(k) * double(n) / n_total;
    acc += x[n] * cd(std::cos(ang), std::sin(ang));
  }
  return acc;
}

std::vector<cd> gauss_solve(std::vector<std::vector<cd>> a, std::vector<cd> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) == 0.0) throw std::runtime_error("singular");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const cd factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<cd> x(n);
  for (std::size_t i = n; i-- > 0;) {
    cd acc = b[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
    x[i] = acc / a[i][i];
  }
  return x;
}

std::vector<double> random_signal(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 0.3);
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

double rms_diff(std::span<const double> a, std::span<const double> b,
                std::size_t begin, std::size_t end) {
  end = std::min({end, a.size(), b.size()});
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return end > begin ? std::sqrt(acc / double(end - begin)) : 0.0;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("beamrecall-test-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace oracle
