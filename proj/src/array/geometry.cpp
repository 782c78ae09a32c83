// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "beamrecall/array_dsp.hpp"
#include "beamrecall/error.hpp"

namespace beamrecall::array {

ArrayGeometry::ArrayGeometry(std::string name, std::vector<MicPosition> mics)
    : name_(std::move(name)), mics_(std::move(mics)) {
  if (mics_.size() < 2)
    throw Error(ErrorCode::BadConfig, "array needs at least two microphones");
  for (const auto& m : mics_)
    if (!std::isfinite(m.x) || !std::isfinite(m.y) || !std::isfinite(m.z))
      throw Error(ErrorCode::BadConfig, "microphone position is not finite");
}

ArrayGeometry uma8_geometry() {
  constexpr double radius = 0.045;
  std::vector<MicPosition> mics{{0.0, 0.0, 0.0}};
  for (int k = 0; k < 6; ++k) {
    const double az = double(k) * std::numbers::pi / 3.0;
    mics.push_back({radius * std::cos(az), radius * std::sin(az), 0.0});
  }
  return ArrayGeometry("uma8", std::move(mics));
}

ArrayGeometry geometry_by_name(const std::string& name) {
  if (name == "uma8") return uma8_geometry();
  throw Error(ErrorCode::BadConfig, "unknown array geometry '" + name + "'");
}

double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  return w >= 360.0 ? 0.0 : w;
}

double angular_distance(double a_deg, double b_deg) {
  const double d = wrap_degrees(a_deg - b_deg);
  return std::min(d, 360.0 - d);
}

SteeringVector steering_vector(const ArrayGeometry& geom, double azimuth_deg,
                               double freq_hz, double speed_of_sound) {
  const double az = azimuth_deg * std::numbers::pi / 180.0;
  const double ux = std::cos(az);
  const double uy = std::sin(az);
  SteeringVector sv{wrap_degrees(azimuth_deg), freq_hz,
                    ComplexVector(Eigen::Index(geom.num_mics()))};
  for (std::size_t m = 0; m < geom.num_mics(); ++m) {
    const auto& p = geom.mics()[m];
    const double lead_s = (p.x * ux + p.y * uy) / speed_of_sound;
    const double phase = 2.0 * std::numbers::pi * freq_hz * lead_s;
    sv.elements[Eigen::Index(m)] = std::polar(1.0, phase);
  }
  return sv;
}

std::vector<ComplexVector> steering_per_bin(const ArrayGeometry& geom,
                                            double azimuth_deg,
                                            int sample_rate_hz,
                                            std::size_t window_size,
                                            double speed_of_sound) {
  std::vector<ComplexVector> out;
  out.reserve(window_size / 2 + 1);
  for (std::size_t b = 0; b <= window_size / 2; ++b) {
    const double f = double(b) * sample_rate_hz / double(window_size);
    out.push_back(steering_vector(geom, azimuth_deg, f, speed_of_sound).elements);
  }
  return out;
}

}  // namespace beamrecall::array
