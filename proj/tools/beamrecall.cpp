// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

// Operator CLI: ingest, doa, beamform, beampattern, simulate, evaluate,
// query and serve.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <iterator>
#include <json.hpp>

#include "beamrecall/array_dsp.hpp"
#include "beamrecall/audio.hpp"
#include "beamrecall/error.hpp"
#include "beamrecall/scene.hpp"
#include "beamrecall/service.hpp"
#include "beamrecall/stft.hpp"

namespace {

using namespace beamrecall;
using nlohmann::json;
namespace fs = std::filesystem;

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const fs::path& p) {
  const auto b = read_bytes(p);
  return {b.begin(), b.end()};
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + p.string());
}

std::vector<array::StreamDirection> parse_directions(const std::vector<std::string>& specs) {
  std::vector<array::StreamDirection> out;
  for (const auto& s : specs) out.push_back(service::parse_direction(s));
  return out;
}

struct ServiceFlags {
  std::string config_path;
  std::string sessions;
  std::string fixture_dir;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Service config file");
    cmd->add_option("--sessions", sessions, "Sessions root directory");
    cmd->add_option("--fixture-dir", fixture_dir, "Transcript fixture directory for the fixture ASR");
  }

  service::ServiceConfig load() const {
    auto cfg = config_path.empty() ? service::parse_config("") : service::load_config(config_path);
    if (!sessions.empty()) cfg.sessions_root = sessions;
    if (!fixture_dir.empty()) cfg.asr_fixture_dir = fixture_dir;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beamrecall: directional recall of missed conversations"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  bool as_json = false;
  app.add_flag("--json", as_json, "Machine-readable JSON output")->configurable(false);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Beamform, transcribe and index a multichannel WAV");
  std::string ingest_wav, geometry = "uma8";
  std::vector<std::string> ingest_dirs;
  bool auto_doa = false;
  int max_sources = 2;
  ServiceFlags ingest_flags;
  ingest->add_option("--wav", ingest_wav, "Multichannel WAV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--direction", ingest_dirs, "Stream as label:azimuth (repeatable)");
  ingest->add_flag("--auto-doa", auto_doa, "Find directions with SRP-PHAT");
  ingest->add_option("--max-sources", max_sources, "Peaks to keep with --auto-doa");
  ingest->add_option("--geometry", geometry, "Array geometry name");
  ingest_flags.add_to(ingest);

  // doa
  auto* doa = app.add_subcommand("doa", "Estimate source directions with SRP-PHAT");
  std::string doa_wav, spectrum_out;
  double doa_resolution = 1.0;
  std::size_t doa_peaks = 2;
  doa->add_option("--wav", doa_wav, "Multichannel WAV")->required()->check(CLI::ExistingFile);
  doa->add_option("--max-sources", doa_peaks, "Peaks to report");
  doa->add_option("--resolution", doa_resolution, "Grid step in degrees");
  doa->add_option("--geometry", geometry, "Array geometry name");
  doa->add_option("--spectrum", spectrum_out, "Write the steered response as CSV");

  // beamform
  auto* beamform = app.add_subcommand("beamform", "Write one MVDR stream per direction");
  std::string bf_wav, bf_out;
  std::vector<std::string> bf_dirs;
  beamform->add_option("--wav", bf_wav, "Multichannel WAV")->required()->check(CLI::ExistingFile);
  beamform->add_option("--direction", bf_dirs, "label:azimuth (repeatable)")->required();
  beamform->add_option("--out-dir", bf_out, "Output directory")->required();
  beamform->add_option("--geometry", geometry, "Array geometry name");

  // beampattern
  auto* pattern = app.add_subcommand("beampattern", "Beam pattern CSV of an MVDR beamformer");
  std::string bp_wav, bp_direction, bp_session, bp_out;
  double bp_freq = 1000.0, bp_resolution = 1.0;
  ServiceFlags bp_flags;
  pattern->add_option("--wav", bp_wav, "Multichannel WAV to estimate covariance from");
  pattern->add_option("--session", bp_session, "Use a stored session's beamformer instead");
  pattern->add_option("--direction", bp_direction, "label:azimuth with --wav, label with --session");
  pattern->add_option("--freq", bp_freq, "Frequency in Hz")->required();
  pattern->add_option("--resolution", bp_resolution, "Grid step in degrees");
  pattern->add_option("--out", bp_out, "CSV path (stdout when omitted)");
  pattern->add_option("--geometry", geometry, "Array geometry name");
  bp_flags.add_to(pattern);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Render a free-field scene to a multichannel WAV");
  std::string sim_spec, sim_out, sim_refs;
  simulate->add_option("--spec", sim_spec, "Scene JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim_out, "Output WAV")->required();
  simulate->add_option("--references", sim_refs, "Directory for per-source reference WAVs");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "STOI and SI-SDR before and after beamforming");
  std::string eval_spec;
  evaluate->add_option("--spec", eval_spec, "Scene JSON")->required()->check(CLI::ExistingFile);

  // query
  auto* query = app.add_subcommand("query", "Ask what was missed in a session");
  std::string q_session, q_text;
  std::optional<int> q_top_k, q_window_k;
  std::optional<double> q_overlap, q_threshold;
  std::string q_mode;
  ServiceFlags q_flags;
  query->add_option("--session", q_session, "Session id")->required();
  query->add_option("--q", q_text, "Natural-language question")->required();
  query->add_option("--top-k", q_top_k, "Retrieved chunks");
  query->add_option("--window-k", q_window_k, "Neighbour chunks per side");
  query->add_option("--min-overlap", q_overlap, "Seconds of overlap to count as missed");
  query->add_option("--relevance-mode", q_mode, "llm or threshold");
  query->add_option("--relevance-threshold", q_threshold, "Cosine cut-off in threshold mode");
  q_flags.add_to(query);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::string host, static_dir;
  std::optional<int> port;
  ServiceFlags serve_flags;
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--port", port, "Listen port (0 picks one)");
  serve->add_option("--static-dir", static_dir, "UI assets served at /");
  serve_flags.add_to(serve);

  for (auto* sub : app.get_subcommands({})) sub->add_flag("--json", as_json, "Machine-readable JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest) {
      const auto cfg = ingest_flags.load();
      service::IngestPlan plan;
      plan.auto_doa = auto_doa;
      plan.max_sources = max_sources;
      plan.geometry = geometry;
      plan.directions = parse_directions(ingest_dirs);
      plan = service::plan_from_json(service::plan_to_json(plan).dump());
      service::SessionStore store(cfg.sessions_root);
      const auto id = store.ingest(read_bytes(ingest_wav), plan, {cfg.separation, cfg.max_sentences},
                                   service::make_backends(cfg));
      if (as_json)
        std::cout << service::manifest_to_json(store.open(id)->manifest()).dump(2) << "\n";
      else
        std::cout << id << "\n";
    } else if (*doa) {
      const auto audio = audio::read_wav(doa_wav);
      array::SrpPhatConfig cfg;
      cfg.max_peaks = doa_peaks;
      cfg.grid_resolution_deg = doa_resolution;
      const auto est = array::srp_phat(stft(audio), array::geometry_by_name(geometry), cfg);
      if (!spectrum_out.empty()) write_text(spectrum_out, array::spectrum_csv(est));
      if (as_json) {
        json peaks = json::array();
        for (const auto& p : est.peaks) peaks.push_back({{"azimuth_deg", p.azimuth_deg}, {"score", p.score}});
        std::cout << json{{"peaks", peaks}, {"grid_resolution_deg", est.grid_resolution_deg}}.dump(2) << "\n";
      } else {
        for (const auto& p : est.peaks) std::cout << p.azimuth_deg << "\t" << p.score << "\n";
      }
    } else if (*beamform) {
      const auto audio = audio::read_wav(bf_wav);
      const auto dirs = parse_directions(bf_dirs);
      const auto streams = array::separate_streams(audio, array::geometry_by_name(geometry), dirs);
      fs::create_directories(bf_out);
      json written = json::array();
      for (const auto& s : streams) {
        const auto path = fs::path(bf_out) / (s.label + ".wav");
        audio::write_wav(audio::MultichannelAudio::mono(s.samples, s.sample_rate_hz), path,
                         audio::WavEncoding::Float32);
        written.push_back({{"label", s.label}, {"azimuth_deg", s.azimuth_deg}, {"path", path.string()}});
        if (!as_json) std::cout << path.string() << "\n";
      }
      if (as_json) std::cout << written.dump(2) << "\n";
    } else if (*pattern) {
      std::string csv;
      if (!bp_session.empty()) {
        service::SessionStore store(bp_flags.load().sessions_root);
        csv = store.open(bp_session)->beampattern_csv(bp_direction, bp_freq, bp_resolution);
      } else {
        if (bp_wav.empty() || bp_direction.empty())
          throw Error(ErrorCode::BadConfig, "beampattern needs --session or both --wav and --direction");
        const auto audio = audio::read_wav(bp_wav);
        const std::vector<array::StreamDirection> dirs{service::parse_direction(bp_direction)};
        const auto geom = array::geometry_by_name(geometry);
        const auto streams = array::separate_streams(audio, geom, dirs);
        csv = array::to_csv(array::beam_pattern(streams.front().weights, geom, bp_freq, bp_resolution));
      }
      if (bp_out.empty())
        std::cout << csv;
      else
        write_text(bp_out, csv);
    } else if (*simulate) {
      const auto spec = scene::load_scene_spec(read_text(sim_spec), fs::path(sim_spec).parent_path());
      const auto result = scene::simulate_scene(spec);
      const auto report = audio::write_wav(result.mixture, sim_out, audio::WavEncoding::Float32);
      if (!sim_refs.empty()) {
        fs::create_directories(sim_refs);
        for (std::size_t i = 0; i < spec.sources.size(); ++i)
          audio::write_wav(audio::MultichannelAudio::mono(result.references[i], spec.sample_rate_hz),
                           fs::path(sim_refs) / (spec.sources[i].label + ".wav"),
                           audio::WavEncoding::Float32);
      }
      const json summary{{"out", sim_out},
                         {"channels", result.mixture.num_channels()},
                         {"samples", result.mixture.num_samples()},
                         {"sample_rate_hz", result.mixture.sample_rate_hz()},
                         {"clipped_samples", report.clipped_samples}};
      std::cout << (as_json ? summary.dump(2) : sim_out) << "\n";
    } else if (*evaluate) {
      const auto spec = scene::load_scene_spec(read_text(eval_spec), fs::path(eval_spec).parent_path());
      const auto report = scene::evaluate_scene(spec);
      if (as_json) {
        std::cout << scene::to_json(report) << "\n";
      } else {
        for (const auto& s : report.streams)
          std::cout << s.label << " (" << s.azimuth_deg << " deg): STOI " << s.stoi_before << " -> "
                    << s.stoi_after << ", SI-SDR " << s.si_sdr_before_db << " -> " << s.si_sdr_after_db
                    << " dB\n";
      }
    } else if (*query) {
      const auto cfg = q_flags.load();
      json overrides = json::object();
      if (q_top_k) overrides["top_k"] = *q_top_k;
      if (q_window_k) overrides["window_k"] = *q_window_k;
      if (q_overlap) overrides["min_overlap_s"] = *q_overlap;
      if (q_threshold) overrides["relevance_threshold"] = *q_threshold;
      if (!q_mode.empty()) overrides["relevance_mode"] = q_mode;
      const auto rc = service::apply_overrides(cfg.recall, overrides);
      service::SessionStore store(cfg.sessions_root);
      const auto out = service::run_query(*store.open(q_session), q_text, rc, service::make_backends(cfg));
      // RecallResult JSON is the query output in both modes.
      std::cout << out;
    } else if (*serve) {
      auto cfg = serve_flags.load();
      if (!host.empty()) cfg.host = host;
      if (port) cfg.port = *port;
      if (!static_dir.empty()) cfg.static_dir = static_dir;
      service::ApiServer server(cfg);
      const int bound = server.bind();
      std::cerr << "listening on http://" << cfg.host << ":" << bound << std::endl;
      service::serve_until_signal(server);
    }
  } catch (const Error& e) {
    if (as_json)
      std::cerr << service::error_json(e) << "\n";
    else
      std::cerr << "error" << (e.stage().empty() ? "" : " [" + e.stage() + "]") << " "
                << to_string(e.code()) << ": " << e.what() << "\n";
    return service::is_user_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
