// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference computations used only by tests. Nothing here calls
// into the library's numeric paths.

#pragma once

#include <complex>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace oracle {

using cd = std::complex<double>;

/// O(n^2) DFT bin evaluation: sum_n x[n] e^{-i 2 pi k n / N}.
cd dft_bin(std::span<const double> x, std::size_t k);

/// Dense complex solve A x = b by Gaussian elimination with partial pivoting.
std::vector<cd> gauss_solve(std::vector<std::vector<cd>> a, std::vector<cd> b);

std::vector<double> random_signal(std::size_t n, std::mt19937_64& rng);

double rms_diff(std::span<const double> a, std::span<const double> b,
                std::size_t begin = 0, std::size_t end = std::size_t(-1));

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
