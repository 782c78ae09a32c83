// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

// Far-field array processing for a planar microphone array: steering
// vectors, spatial covariance, SRP-PHAT direction finding and MVDR
// beamforming in the STFT domain.

#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "beamrecall/audio.hpp"
#include "beamrecall/stft.hpp"

namespace beamrecall::array {

inline constexpr double kSpeedOfSound = 343.0;
inline constexpr double kDefaultLoading = 1e-3;
inline constexpr double kMinSeparationDeg = 20.0;

using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

struct MicPosition {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

class ArrayGeometry {
 public:
  /// Throws Error(BadConfig) for fewer than two mics or non-finite positions.
  ArrayGeometry(std::string name, std::vector<MicPosition> mics);

  const std::string& name() const { return name_; }
  std::size_t num_mics() const { return mics_.size(); }
  const std::vector<MicPosition>& mics() const { return mics_; }

 private:
  std::string name_;
  std::vector<MicPosition> mics_;
};

/// miniDSP UMA-8: one mic at the origin and six on a 45 mm radius at
/// 0, 60, ..., 300 degrees, all in the z = 0 plane.
ArrayGeometry uma8_geometry();

/// Looks up a preset by name ("uma8"); throws Error(BadConfig) otherwise.
ArrayGeometry geometry_by_name(const std::string& name);

/// Wraps an angle into [0, 360).
double wrap_degrees(double deg);

/// Smallest absolute difference between two azimuths on the circle.
double angular_distance(double a_deg, double b_deg);

struct SteeringVector {
  double azimuth_deg = 0.0;
  double freq_hz = 0.0;
  ComplexVector elements;
};

/// Plane-wave response exp(+i 2 pi f (p . u) / c) with u = (cos az, sin az, 0)
/// pointing toward the source; mics nearer the source lead in phase.
SteeringVector steering_vector(const ArrayGeometry& geom, double azimuth_deg,
                               double freq_hz,
                               double speed_of_sound = kSpeedOfSound);

/// Steering elements for every STFT bin of a window at the given rate.
std::vector<ComplexVector> steering_per_bin(const ArrayGeometry& geom,
                                            double azimuth_deg,
                                            int sample_rate_hz,
                                            std::size_t window_size,
                                            double speed_of_sound = kSpeedOfSound);

struct CovarianceMatrix {
  std::size_t bin_index = 0;
  ComplexMatrix matrix;
};

/// R = (1/F) sum_f x_f x_f^H + loading * (tr R / M) I per bin.
std::vector<CovarianceMatrix> estimate_covariance(
    const StftTensor& tensor, double loading_factor = kDefaultLoading);

struct DoaPeak {
  double azimuth_deg = 0.0;
  double score = 0.0;
};

struct DoaEstimate {
  double grid_resolution_deg = 1.0;
  /// spectrum[i] is the steered response at azimuth i * grid_resolution_deg.
  std::vector<double> spectrum;
  /// Local maxima, highest first, pairwise at least min_separation apart.
  std::vector<DoaPeak> peaks;
};

struct SrpPhatConfig {
  double grid_resolution_deg = 1.0;
  std::size_t max_peaks = 2;
  double min_separation_deg = kMinSeparationDeg;
  double min_freq_hz = 300.0;
  double max_freq_hz = 4000.0;
  double speed_of_sound = kSpeedOfSound;
  /// Mean per-bin spectral power below which the input counts as silent.
  double silence_threshold = 1e-10;
};

DoaEstimate srp_phat(const StftTensor& tensor, const ArrayGeometry& geom,
                     const SrpPhatConfig& config = {});

/// Picks circular local maxima of `spectrum` in descending order, skipping
/// any within min_separation_deg of one already taken.
std::vector<DoaPeak> pick_peaks(std::span<const double> spectrum,
                                double grid_resolution_deg,
                                std::size_t max_peaks,
                                double min_separation_deg);

struct BeamformerWeights {
  double azimuth_deg = 0.0;
  int sample_rate_hz = 0;
  std::size_t window_size = 0;
  std::vector<ComplexVector> weights_per_bin;
};

/// w = R^-1 d / (d^H R^-1 d) for a single bin. Throws
/// Error(SingularCovariance) when cond(R) exceeds 1e12.
ComplexVector mvdr_weight(const ComplexMatrix& covariance,
                          const ComplexVector& steering);

BeamformerWeights mvdr_weights(std::span<const CovarianceMatrix> covariances,
                               std::span<const ComplexVector> steering,
                               double azimuth_deg, int sample_rate_hz,
                               std::size_t window_size);

/// Y(f, bin) = w_bin^H X(f, bin), resynthesized to the input length.
audio::Signal apply_beamformer(const StftTensor& tensor,
                               const BeamformerWeights& weights);

struct BeamPatternPoint {
  double azimuth_deg = 0.0;
  double gain = 0.0;
};

/// |w_bin^H d(az, freq_hz)| over the azimuth grid, using the bin nearest
/// freq_hz. Throws Error(BinOutOfRange) outside [0, Nyquist].
std::vector<BeamPatternPoint> beam_pattern(const BeamformerWeights& weights,
                                           const ArrayGeometry& geom,
                                           double freq_hz,
                                           double grid_resolution_deg = 1.0,
                                           double speed_of_sound = kSpeedOfSound);

struct StreamDirection {
  std::string label;
  double azimuth_deg = 0.0;
};

struct DirectionalStream {
  std::string label;
  double azimuth_deg = 0.0;
  audio::Signal samples;
  int sample_rate_hz = 0;
  BeamformerWeights weights;
};

struct SeparationConfig {
  StftConfig stft;
  double loading_factor = kDefaultLoading;
  double speed_of_sound = kSpeedOfSound;
  double min_separation_deg = kMinSeparationDeg;
};

/// One MVDR stream per requested direction, sharing a covariance estimated
/// over the whole recording.
std::vector<DirectionalStream> separate_streams(
    const audio::MultichannelAudio& audio, const ArrayGeometry& geom,
    std::span<const StreamDirection> directions,
    const SeparationConfig& config = {});

/// "azimuth_deg,value" rows with a header line.
std::string to_csv(std::span<const BeamPatternPoint> points);
std::string spectrum_csv(const DoaEstimate& estimate);

}  // namespace beamrecall::array
