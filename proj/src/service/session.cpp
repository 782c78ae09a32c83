// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <future>
#include <random>
#include <set>
#include <sstream>

#include "beamrecall/service.hpp"
#include "beamrecall/stft.hpp"

namespace beamrecall::service {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kBeamformersFile = "beamformers.json";

template <typename F>
auto staged(const char* stage, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.with_stage(stage);
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::IoFailure, e.what(), stage);
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + p.string());
}

bool valid_label(const std::string& label) {
  return !label.empty() && label.size() <= 64 &&
         std::all_of(label.begin(), label.end(), [](unsigned char c) {
           return std::isalnum(c) || c == '_' || c == '-';
         });
}

bool inside_session(const std::string& rel) {
  const fs::path p(rel);
  if (rel.empty() || p.is_absolute()) return false;
  return std::none_of(p.begin(), p.end(), [](const fs::path& part) { return part == ".."; });
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string sha256_hex(std::span<const std::uint8_t> a, const std::string& b) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), a.data(), a.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), b.data(), b.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error(ErrorCode::IoFailure, "SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

json canonical_config(const IngestPlan& plan, const IngestOptions& options, const Backends& backends) {
  return {{"plan", plan_to_json(plan)},
          {"window_size", options.separation.stft.window_size},
          {"hop_size", options.separation.stft.hop_size},
          {"loading_factor", options.separation.loading_factor},
          {"speed_of_sound", options.separation.speed_of_sound},
          {"max_sentences", options.max_sentences},
          {"asr", backends.asr->kind()},
          {"embedding", backends.embedder->kind()},
          {"embedding_dim", backends.embedder->dim()}};
}

json weights_to_json(const array::BeamformerWeights& w) {
  json bins = json::array();
  for (const auto& v : w.weights_per_bin) {
    json row = json::array();
    for (Eigen::Index m = 0; m < v.size(); ++m) {
      row.push_back(v[m].real());
      row.push_back(v[m].imag());
    }
    bins.push_back(std::move(row));
  }
  return {{"azimuth_deg", w.azimuth_deg},
          {"sample_rate_hz", w.sample_rate_hz},
          {"window_size", w.window_size},
          {"weights", std::move(bins)}};
}

array::BeamformerWeights weights_from_json(const json& o) {
  array::BeamformerWeights w;
  w.azimuth_deg = o.at("azimuth_deg").get<double>();
  w.sample_rate_hz = o.at("sample_rate_hz").get<int>();
  w.window_size = o.at("window_size").get<std::size_t>();
  for (const auto& row : o.at("weights")) {
    array::ComplexVector v(Eigen::Index(row.size() / 2));
    for (Eigen::Index m = 0; m < v.size(); ++m)
      v[m] = {row.at(std::size_t(2 * m)).get<double>(), row.at(std::size_t(2 * m + 1)).get<double>()};
    w.weights_per_bin.push_back(std::move(v));
  }
  return w;
}

std::string transcript_json(const std::vector<transcribe::TranscriptSegment>& segments) {
  json arr = json::array();
  for (const auto& s : segments) arr.push_back({{"text", s.text}, {"start", s.start_s}, {"end", s.end_s}});
  return arr.dump(2);
}

std::string azimuth_label(double az) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "az%03d", int(std::lround(array::wrap_degrees(az))) % 360);
  return buf;
}

}  // namespace

nlohmann::json manifest_to_json(const SessionManifest& m) {
  json streams = json::array();
  for (const auto& s : m.streams)
    streams.push_back({{"label", s.label},
                       {"azimuth_deg", s.azimuth_deg},
                       {"wav", s.wav},
                       {"transcript", s.transcript}});
  return {{"session_id", m.session_id}, {"created_at", m.created_at},
          {"sample_rate_hz", m.sample_rate_hz}, {"geometry", m.geometry},
          {"duration_s", m.duration_s}, {"streams", std::move(streams)},
          {"chunk_count", m.chunk_count}, {"config", m.config}};
}

SessionManifest manifest_from_json(const nlohmann::json& doc) {
  try {
    SessionManifest m;
    m.session_id = doc.at("session_id").get<std::string>();
    m.created_at = doc.at("created_at").get<std::string>();
    m.sample_rate_hz = doc.at("sample_rate_hz").get<int>();
    m.geometry = doc.at("geometry").get<std::string>();
    m.duration_s = doc.at("duration_s").get<double>();
    m.chunk_count = doc.at("chunk_count").get<std::size_t>();
    m.config = doc.value("config", json::object());
    std::set<std::string> labels;
    for (const auto& s : doc.at("streams")) {
      StreamRecord r{s.at("label").get<std::string>(), s.at("azimuth_deg").get<double>(),
                     s.at("wav").get<std::string>(), s.at("transcript").get<std::string>()};
      if (!inside_session(r.wav) || !inside_session(r.transcript))
        throw Error(ErrorCode::CorruptFile, "manifest path escapes the session directory");
      if (!labels.insert(r.label).second)
        throw Error(ErrorCode::CorruptFile, "manifest repeats stream " + r.label);
      m.streams.push_back(std::move(r));
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("bad manifest: ") + e.what());
  }
}

array::StreamDirection parse_direction(const std::string& spec) {
  const auto colon = spec.rfind(':');
  if (colon == std::string::npos || colon == 0)
    throw Error(ErrorCode::BadConfig, "direction must look like label:azimuth, got " + spec);
  try {
    std::size_t used = 0;
    const double az = std::stod(spec.substr(colon + 1), &used);
    if (used != spec.size() - colon - 1 || !std::isfinite(az)) throw std::invalid_argument("");
    return {spec.substr(0, colon), az};
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::BadConfig, "direction azimuth is not a number: " + spec);
  }
}

IngestPlan plan_from_json(const std::string& text) {
  IngestPlan plan;
  try {
    const auto doc = text.empty() ? json::object() : json::parse(text);
    if (!doc.is_object()) throw Error(ErrorCode::BadConfig, "ingest plan must be an object");
    plan.auto_doa = doc.value("auto_doa", false);
    plan.max_sources = doc.value("max_sources", 2);
    plan.geometry = doc.value("geometry", std::string("uma8"));
    if (doc.contains("directions")) {
      const auto& d = doc["directions"];
      if (d.is_object()) {
        for (const auto& [label, az] : d.items()) plan.directions.push_back({label, az.get<double>()});
      } else {
        for (const auto& e : d)
          plan.directions.push_back({e.at("label").get<std::string>(), e.at("azimuth_deg").get<double>()});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("bad ingest plan: ") + e.what());
  }
  if (plan.auto_doa == !plan.directions.empty())
    throw Error(ErrorCode::BadConfig, "ingest plan needs either directions or auto_doa, not both");
  if (plan.max_sources < 1) throw Error(ErrorCode::BadConfig, "max_sources must be at least 1");
  for (const auto& d : plan.directions)
    if (!valid_label(d.label))
      throw Error(ErrorCode::BadConfig, "direction label must be 1-64 of [A-Za-z0-9_-]: " + d.label);
  return plan;
}

nlohmann::json plan_to_json(const IngestPlan& plan) {
  json dirs = json::array();
  for (const auto& d : plan.directions) dirs.push_back({{"label", d.label}, {"azimuth_deg", d.azimuth_deg}});
  json out{{"geometry", plan.geometry}, {"auto_doa", plan.auto_doa}, {"directions", dirs}};
  if (plan.auto_doa) out["max_sources"] = plan.max_sources;
  return out;
}

Session::Session(fs::path dir, SessionManifest manifest, index::IndexSnapshot index,
                 std::map<std::string, array::BeamformerWeights> beamformers)
    : dir_(std::move(dir)),
      manifest_(std::move(manifest)),
      index_(std::move(index)),
      beamformers_(std::move(beamformers)) {}

const StreamRecord& Session::stream(const std::string& label) const {
  for (const auto& s : manifest_.streams)
    if (s.label == label) return s;
  throw Error(ErrorCode::UnknownDirection, "session has no stream labeled " + label);
}

std::shared_ptr<const audio::MultichannelAudio> Session::stream_audio(const std::string& label) const {
  const auto& record = stream(label);
  std::lock_guard lock(audio_mutex_);
  auto& slot = audio_[label];
  if (!slot) slot = std::make_shared<const audio::MultichannelAudio>(audio::read_wav(dir_ / record.wav));
  return slot;
}

std::vector<std::uint8_t> Session::audio_slice(const std::string& label, double start_s,
                                               double end_s) const {
  const auto audio = stream_audio(label);
  return audio::encode_wav(audio::slice_audio(*audio, start_s, end_s), audio::WavEncoding::Pcm16);
}

std::string Session::beampattern_csv(const std::string& label, double freq_hz,
                                     double resolution_deg) const {
  if (manifest_.streams.empty()) throw Error(ErrorCode::UnknownDirection, "session has no streams");
  const std::string& chosen = label.empty() ? manifest_.streams.front().label : stream(label).label;
  const auto it = beamformers_.find(chosen);
  if (it == beamformers_.end())
    throw Error(ErrorCode::CorruptFile, "no stored beamformer for stream " + chosen);
  const auto geom = array::geometry_by_name(manifest_.geometry);
  return array::to_csv(array::beam_pattern(it->second, geom, freq_hz, resolution_deg));
}

SessionStore::SessionStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (!fs::is_directory(root_))
    throw Error(ErrorCode::IoFailure, "sessions root is not a directory: " + root_.string());
}

std::vector<SessionManifest> SessionStore::list() const {
  std::vector<SessionManifest> out;
  for (const auto& entry : fs::directory_iterator(root_)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_directory() || name.starts_with(".")) continue;
    const auto manifest = entry.path() / kManifestFile;
    if (!fs::exists(manifest)) continue;
    try {
      out.push_back(manifest_from_json(json::parse(slurp(manifest))));
    } catch (const std::exception&) {
      // A damaged session is skipped in listings; opening it reports why.
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.created_at, a.session_id) < std::tie(b.created_at, b.session_id);
  });
  return out;
}

bool SessionStore::exists(const std::string& id) const {
  return valid_label(id) && fs::exists(root_ / id / kManifestFile);
}

std::shared_ptr<const Session> SessionStore::open(const std::string& id) const {
  if (!exists(id)) throw Error(ErrorCode::UnknownSession, "no session " + id);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(id); it != cache_.end()) return it->second;
  }
  const auto dir = root_ / id;
  json manifest_doc;
  try {
    manifest_doc = json::parse(slurp(dir / kManifestFile));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("bad manifest: ") + e.what());
  }
  auto manifest = manifest_from_json(manifest_doc);
  auto loaded = index::load_index(dir);
  std::map<std::string, array::BeamformerWeights> beamformers;
  try {
    const auto doc = json::parse(slurp(dir / kBeamformersFile));
    for (const auto& [label, w] : doc.items())
      beamformers.emplace(label, weights_from_json(w));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("bad beamformers file: ") + e.what());
  }
  auto session = std::make_shared<const Session>(
      dir, std::move(manifest), index::IndexSnapshot{std::move(loaded.index), std::move(loaded.store)},
      std::move(beamformers));
  std::lock_guard lock(mutex_);
  return cache_.emplace(id, std::move(session)).first->second;
}

std::string SessionStore::session_id(std::span<const std::uint8_t> wav_bytes, const IngestPlan& plan,
                                     const IngestOptions& options, const Backends& backends) {
  return sha256_hex(wav_bytes, canonical_config(plan, options, backends).dump()).substr(0, 12);
}

std::string SessionStore::ingest(std::span<const std::uint8_t> wav_bytes, const IngestPlan& plan,
                                 const IngestOptions& options, const Backends& backends) {
  const auto id = session_id(wav_bytes, plan, options, backends);
  std::shared_ptr<std::mutex> id_lock;
  {
    std::lock_guard lock(mutex_);
    auto& slot = ingest_locks_[id];
    if (!slot) slot = std::make_shared<std::mutex>();
    id_lock = slot;
  }
  std::lock_guard busy(*id_lock);
  if (exists(id)) return id;

  const auto mixture = staged("decode", [&] { return audio::decode_wav(wav_bytes); });
  const auto geom = staged("decode", [&] { return array::geometry_by_name(plan.geometry); });
  if (mixture.num_channels() != geom.num_mics())
    throw Error(ErrorCode::ChannelMismatch,
                "WAV has " + std::to_string(mixture.num_channels()) + " channels but geometry " +
                    geom.name() + " has " + std::to_string(geom.num_mics()) + " mics",
                "decode");

  auto directions = plan.directions;
  if (plan.auto_doa) {
    directions = staged("doa", [&] {
      array::SrpPhatConfig cfg;
      cfg.max_peaks = std::size_t(plan.max_sources);
      cfg.speed_of_sound = options.separation.speed_of_sound;
      const auto est = array::srp_phat(stft(mixture, options.separation.stft), geom, cfg);
      std::vector<array::StreamDirection> found;
      for (const auto& p : est.peaks) found.push_back({azimuth_label(p.azimuth_deg), p.azimuth_deg});
      return found;
    });
  }
  std::sort(directions.begin(), directions.end(),
            [](const auto& a, const auto& b) { return a.label < b.label; });

  const auto streams = staged("beamform", [&] {
    return array::separate_streams(mixture, geom, directions, options.separation);
  });

  const auto transcripts = staged("transcribe", [&] {
    std::vector<std::future<std::vector<transcribe::TranscriptSegment>>> jobs;
    for (const auto& s : streams)
      jobs.push_back(std::async(std::launch::async, [&backends, &s] {
        return backends.asr->transcribe({s.label, s.samples, s.sample_rate_hz});
      }));
    std::vector<std::vector<transcribe::TranscriptSegment>> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
  });

  auto snapshot = staged("index", [&] {
    std::vector<recall::StreamTranscript> inputs;
    for (std::size_t i = 0; i < streams.size(); ++i)
      inputs.push_back({streams[i].label, streams[i].azimuth_deg, transcripts[i]});
    return recall::build_index(inputs, *backends.embedder, options.max_sentences);
  });

  staged("persist", [&] {
    thread_local std::mt19937_64 rng(std::random_device{}());
    const auto tmp = root_ / (".ingest-" + id + "-" + std::to_string(rng() % 1000000000));
    fs::create_directories(tmp / "streams");
    fs::create_directories(tmp / "transcripts");
    try {
      SessionManifest m;
      m.session_id = id;
      m.created_at = utc_now();
      m.sample_rate_hz = mixture.sample_rate_hz();
      m.geometry = geom.name();
      m.duration_s = mixture.duration_s();
      m.chunk_count = snapshot.store.size();
      m.config = canonical_config(plan, options, backends);
      json beamformers = json::object();
      for (std::size_t i = 0; i < streams.size(); ++i) {
        const auto& s = streams[i];
        StreamRecord r{s.label, s.azimuth_deg, "streams/" + s.label + ".wav",
                       "transcripts/" + s.label + ".json"};
        audio::write_wav(audio::MultichannelAudio::mono(s.samples, s.sample_rate_hz), tmp / r.wav,
                         audio::WavEncoding::Float32);
        write_text(tmp / r.transcript, transcript_json(transcripts[i]));
        beamformers[s.label] = weights_to_json(s.weights);
        m.streams.push_back(std::move(r));
      }
      write_text(tmp / kBeamformersFile, beamformers.dump());
      index::save_index(snapshot.index, snapshot.store, tmp);
      write_text(tmp / kManifestFile, manifest_to_json(m).dump(2));
      fs::rename(tmp, root_ / id);
    } catch (...) {
      std::error_code ec;
      fs::remove_all(tmp, ec);
      throw;
    }
    return 0;
  });
  return id;
}

std::string run_query(const Session& session, const std::string& query,
                      const recall::RecallConfig& config, const Backends& backends) {
  return recall::to_json(recall::answer_query(session.index(), query, config, *backends.llm,
                                              *backends.embedder)) +
         "\n";
}

}  // namespace beamrecall::service
