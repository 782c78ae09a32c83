// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Eigenvalues>
#include <cmath>

#include "beamrecall/array_dsp.hpp"
#include "beamrecall/error.hpp"

namespace beamrecall::array {

namespace {
constexpr double kMaxCondition = 1e12;
}

std::vector<CovarianceMatrix> estimate_covariance(const StftTensor& tensor,
                                                  double loading_factor) {
  if (tensor.num_frames() == 0 || tensor.num_channels() == 0)
    throw Error(ErrorCode::EmptyTensor, "covariance needs at least one frame");
  const auto m = Eigen::Index(tensor.num_channels());
  const auto frames = tensor.num_frames();

  std::vector<CovarianceMatrix> out;
  out.reserve(tensor.num_bins());
  ComplexVector x(m);
  for (std::size_t b = 0; b < tensor.num_bins(); ++b) {
    ComplexMatrix r = ComplexMatrix::Zero(m, m);
    for (std::size_t f = 0; f < frames; ++f) {
      for (Eigen::Index c = 0; c < m; ++c) x[c] = tensor.at(std::size_t(c), f, b);
      r.selfadjointView<Eigen::Lower>().rankUpdate(x);
    }
    // rankUpdate fills the lower triangle; mirror it so R is exactly Hermitian.
    r = r.selfadjointView<Eigen::Lower>();
    r /= double(frames);
    const double power = r.trace().real() / double(m);
    // A bin with no energy at all still gets an invertible R.
    const double load = loading_factor * (power > 0.0 ? power : 1.0);
    r.diagonal().array() += load;
    out.push_back({b, std::move(r)});
  }
  return out;
}

ComplexVector mvdr_weight(const ComplexMatrix& covariance,
                          const ComplexVector& steering) {
  if (covariance.rows() != steering.size() || covariance.cols() != steering.size())
    throw Error(ErrorCode::DimensionMismatch, "covariance and steering sizes differ");

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(covariance, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition)
    throw Error(ErrorCode::SingularCovariance,
                "covariance condition number exceeds 1e12");

  const ComplexVector r_inv_d = covariance.ldlt().solve(steering);
  // Dividing by the complex d^H R^-1 d (not its real part) makes w^H d == 1
  // hold to rounding even when the quadratic form picks up an imaginary ulp.
  const Complex denom = steering.dot(r_inv_d);
  return r_inv_d / denom;
}

BeamformerWeights mvdr_weights(std::span<const CovarianceMatrix> covariances,
                               std::span<const ComplexVector> steering,
                               double azimuth_deg, int sample_rate_hz,
                               std::size_t window_size) {
  if (covariances.size() != steering.size())
    throw Error(ErrorCode::DimensionMismatch,
                "one steering vector is needed per covariance bin");
  BeamformerWeights w{wrap_degrees(azimuth_deg), sample_rate_hz, window_size, {}};
  w.weights_per_bin.reserve(covariances.size());
  for (std::size_t b = 0; b < covariances.size(); ++b)
    w.weights_per_bin.push_back(mvdr_weight(covariances[b].matrix, steering[b]));
  return w;
}

}  // namespace beamrecall::array
