// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <json.hpp>

#include "beamrecall/error.hpp"
#include "beamrecall/scene.hpp"

namespace beamrecall::scene {

using nlohmann::json;

SceneSpec load_scene_spec(const std::string& json_text,
                          const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("scene spec is not valid JSON: ") + e.what());
  }
  try {
    SceneSpec spec;
    spec.sample_rate_hz = doc.value("sample_rate_hz", 16000);
    spec.geometry = array::geometry_by_name(doc.value("geometry", std::string("uma8")));
    spec.seed = doc.value("seed", std::uint64_t{0});
    spec.speed_of_sound = doc.value("speed_of_sound", array::kSpeedOfSound);
    if (doc.contains("noise_snr_db") && !doc["noise_snr_db"].is_null())
      spec.noise_snr_db = doc["noise_snr_db"].get<double>();

    const auto& sources = doc.at("sources");
    if (!sources.is_array() || sources.empty())
      throw Error(ErrorCode::BadConfig, "scene spec needs a non-empty sources array");
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const auto& s = sources[i];
      std::filesystem::path path = s.at("path").get<std::string>();
      if (path.is_relative()) path = base_dir / path;
      const auto wav = audio::read_wav(path);
      if (wav.sample_rate_hz() != spec.sample_rate_hz)
        throw Error(ErrorCode::RateMismatch,
                    path.string() + " is " + std::to_string(wav.sample_rate_hz()) +
                        " Hz, scene is " + std::to_string(spec.sample_rate_hz) + " Hz");
      if (wav.num_channels() != 1)
        throw Error(ErrorCode::BadConfig, path.string() + " must be mono");
      SceneSource src;
      src.label = s.value("label", "source" + std::to_string(i));
      src.azimuth_deg = s.at("azimuth_deg").get<double>();
      src.gain = s.value("gain", 1.0);
      src.signal = wav.channels().front();
      spec.sources.push_back(std::move(src));
    }
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("bad scene spec: ") + e.what());
  }
}

MetricReport evaluate_scene(const SceneSpec& spec, const array::SeparationConfig& config) {
  const auto sim = simulate_scene(spec);
  std::vector<array::StreamDirection> dirs;
  for (const auto& s : spec.sources) dirs.push_back({s.label, s.azimuth_deg});
  const auto streams = array::separate_streams(sim.mixture, spec.geometry, dirs, config);
  const auto center = sim.mixture.channel(center_mic(spec.geometry));

  MetricReport report;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    const auto& ref = sim.references[i];
    report.streams.push_back({streams[i].label, streams[i].azimuth_deg,
                              stoi(ref, center, spec.sample_rate_hz),
                              stoi(ref, streams[i].samples, spec.sample_rate_hz),
                              si_sdr(ref, center), si_sdr(ref, streams[i].samples)});
  }
  return report;
}

std::string to_json(const MetricReport& report) {
  json streams = json::array();
  for (const auto& s : report.streams)
    streams.push_back({{"label", s.label},
                       {"azimuth_deg", s.azimuth_deg},
                       {"stoi_before", s.stoi_before},
                       {"stoi_after", s.stoi_after},
                       {"si_sdr_before_db", s.si_sdr_before_db},
                       {"si_sdr_after_db", s.si_sdr_after_db}});
  return json{{"streams", streams}}.dump(2);
}

}  // namespace beamrecall::scene
