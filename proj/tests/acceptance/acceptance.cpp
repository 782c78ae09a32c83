// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, offline backends only.
// Exits 1 when any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "beamrecall/array_dsp.hpp"
#include "beamrecall/error.hpp"
#include "beamrecall/recall.hpp"
#include "beamrecall/scene.hpp"
#include "beamrecall/semantic_index.hpp"
#include "beamrecall/service.hpp"
#include "beamrecall/stft.hpp"
#include "beamrecall/transcribe.hpp"
#include "oracles.hpp"
#include "speech_synth.hpp"

// httplib last: resolv.h defines _res, which collides with Eigen internals.
#include <httplib.h>

using namespace beamrecall;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = fs::path(BR_FIXTURE_DIR) / "recall";
const std::string kAiQuery = "What did I miss when I was listening to the AI conversation?";

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void run(const std::string& name, double time_limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = time_limit_s <= 0.0 || secs < time_limit_s;
  const bool pass = o.pass && in_time;
  g_failures += !pass;
  char timing[64];
  if (time_limit_s > 0.0)
    std::snprintf(timing, sizeof timing, "%.2f s, limit %.0f s", secs, time_limit_s);
  else
    std::snprintf(timing, sizeof timing, "%.2f s", secs);
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " (" << timing << ")"
            << (in_time ? "" : " over time limit") << std::endl;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------- array DSP

array::ComplexMatrix random_hpd(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  array::ComplexMatrix a(7, 7);
  for (Eigen::Index i = 0; i < 7; ++i)
    for (Eigen::Index j = 0; j < 7; ++j) a(i, j) = Complex(g(rng), g(rng));
  array::ComplexMatrix r = a * a.adjoint();
  r.diagonal().array() += 0.1;
  return r;
}

// w = R^-1 d / (d^H R^-1 d) via the Gaussian-elimination reference solver.
std::vector<oracle::cd> dense_mvdr(const array::ComplexMatrix& r, const array::ComplexVector& d) {
  std::vector<std::vector<oracle::cd>> a(7, std::vector<oracle::cd>(7));
  std::vector<oracle::cd> b(7);
  for (std::size_t i = 0; i < 7; ++i) {
    b[i] = d[Eigen::Index(i)];
    for (std::size_t j = 0; j < 7; ++j) a[i][j] = r(Eigen::Index(i), Eigen::Index(j));
  }
  auto u = oracle::gauss_solve(a, b);
  oracle::cd denom = 0;
  for (std::size_t i = 0; i < 7; ++i) denom += std::conj(b[i]) * u[i];
  for (auto& v : u) v /= denom;
  return u;
}

Outcome mvdr_correctness() {
  const auto g = array::uma8_geometry();
  std::mt19937_64 rng(101);
  double worst_gain = 0.0, worst_diff = 0.0;
  for (int m = 0; m < 100; ++m) {
    const auto r = random_hpd(rng);
    const double az = double(rng() % 360);
    for (std::size_t bin = 0; bin < 257; ++bin) {
      const auto d = array::steering_vector(g, az, double(bin) * 16000.0 / 512.0).elements;
      const auto w = array::mvdr_weight(r, d);
      worst_gain = std::max(worst_gain, std::abs(w.dot(d) - 1.0));
      const auto ref = dense_mvdr(r, d);
      for (Eigen::Index k = 0; k < 7; ++k)
        worst_diff = std::max(worst_diff, std::abs(w[k] - ref[std::size_t(k)]));
    }
  }
  return {worst_gain < 1e-9 && worst_diff < 1e-9,
          fmt("100 matrices x 257 bins, max |w^H d - 1| = %.2e, max oracle diff = %.2e", worst_gain,
              worst_diff)};
}

Outcome identity_reduction() {
  const auto g = array::uma8_geometry();
  double worst = 0.0;
  for (double az : {0.0, 45.0, 135.0, 270.0})
    for (std::size_t bin = 0; bin < 257; ++bin) {
      const auto d = array::steering_vector(g, az, double(bin) * 16000.0 / 512.0).elements;
      const auto w = array::mvdr_weight(array::ComplexMatrix::Identity(7, 7), d);
      worst = std::max(worst, (w - d / 7.0).cwiseAbs().maxCoeff());
    }
  return {worst < 1e-12, fmt("R = I over 257 bins, max |w - d/7| = %.2e", worst)};
}

scene::SceneSpec two_talkers(double seconds) {
  scene::SceneSpec spec;
  spec.sources = {{"left", 135.0, fixtures::synth_speech(12, seconds, 16000, fixtures::kHighVoice), 1.0},
                  {"right", 45.0, fixtures::synth_speech(11, seconds, 16000, fixtures::kLowVoice), 1.0}};
  spec.seed = 5;
  return spec;
}

// Max over truths of the distance to the nearest distinct peak.
double doa_error(const array::DoaEstimate& est) {
  if (est.peaks.size() < 2) return 360.0;
  const double a = est.peaks[0].azimuth_deg, b = est.peaks[1].azimuth_deg;
  const double straight = std::max(array::angular_distance(a, 45.0), array::angular_distance(b, 135.0));
  const double crossed = std::max(array::angular_distance(a, 135.0), array::angular_distance(b, 45.0));
  return std::min(straight, crossed);
}

Outcome doa_accuracy() {
  const auto g = array::uma8_geometry();
  auto spec = two_talkers(10.0);
  const double clean = doa_error(array::srp_phat(stft(scene::simulate_scene(spec).mixture), g));
  spec.noise_snr_db = 10.0;
  const double noisy = doa_error(array::srp_phat(stft(scene::simulate_scene(spec).mixture), g));
  return {clean <= 5.0 && noisy <= 10.0,
          fmt("sources at 45/135 deg, worst error %.1f deg noiseless (<= 5), %.1f deg at 10 dB SNR (<= 10)",
              clean, noisy)};
}

Outcome beamforming_gain() {
  const auto spec = two_talkers(30.0);
  const auto sim = scene::simulate_scene(spec);
  const auto g = array::uma8_geometry();
  const std::vector<array::StreamDirection> dirs{{"left", 135.0}, {"right", 45.0}};
  const auto streams = array::separate_streams(sim.mixture, g, dirs);
  const auto center = sim.mixture.channel(scene::center_mic(g));
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& ref = sim.references[i];
    const double sdr_gain = scene::si_sdr(ref, streams[i].samples) - scene::si_sdr(ref, center);
    const double stoi_gain = scene::stoi(ref, streams[i].samples, 16000) - scene::stoi(ref, center, 16000);
    ok = ok && sdr_gain >= 8.0 && stoi_gain >= 0.15;
    detail += (i ? "; " : "") + streams[i].label +
              fmt(" SI-SDR +%.2f dB (>= 8), STOI +%.3f (>= 0.15)", sdr_gain, stoi_gain);
  }
  return {ok, detail};
}

Outcome stft_round_trip() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 2000 + rng() % 30000;
    const auto x = oracle::random_signal(n, rng);
    const auto y = istft(stft(audio::MultichannelAudio::mono(x, 16000)));
    worst = std::max(worst, oracle::rms_diff(x, y));
  }
  return {worst < 1e-6, fmt("100 random signals, max RMS error %.2e (< 1e-6)", worst)};
}

Outcome stoi_sanity() {
  const auto x = fixtures::synth_speech(21, 6.0, 16000, fixtures::kLowVoice);
  const auto y = fixtures::synth_speech(22, 6.0, 16000, fixtures::kHighVoice);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  audio::Signal noise(x.size()), degraded(x.size()), scaled(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    noise[i] = 0.08 * n01(rng);
    degraded[i] = x[i] + 0.5 * y[i];
    scaled[i] = 7.5 * degraded[i];
  }
  const double self = scene::stoi(x, x, 16000);
  const double d1 = scene::stoi(x, degraded, 16000), d2 = scene::stoi(x, scaled, 16000);
  const double vs_noise = scene::stoi(x, noise, 16000);
  const bool ok = std::abs(self - 1.0) <= 1e-6 && std::abs(d1 - d2) <= 1e-9 && vs_noise < 0.3;
  return {ok, fmt("stoi(x,x) = %.9f, scaled-estimate diff %.1e, stoi(speech, noise) = %.3f (< 0.3)", self,
                  std::abs(d1 - d2), vs_noise)};
}

// ---------------------------------------------------------------- index

index::EmbeddingVector random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> v(dim);
  for (auto& x : v) x = g(rng);
  return index::EmbeddingVector::normalized(v);
}

Outcome index_exactness() {
  std::mt19937_64 rng(384);
  std::vector<index::EmbeddingVector> rows;
  std::vector<std::uint64_t> ids;
  index::MetadataStore store;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    rows.push_back(random_unit(384, rng));
    ids.push_back(i);
    store.add({i, "chunk " + std::to_string(i), i % 2 ? "left" : "right", 0.0, double(i), double(i) + 1.0,
               std::size_t(i / 2)});
  }
  index::VectorIndex idx(384);
  idx.add(ids, rows);
  int mismatches = 0;
  for (int q = 0; q < 50; ++q) {
    const auto query = random_unit(384, rng);
    std::vector<std::pair<double, std::uint64_t>> scan;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < 384; ++j) s += double(rows[r].values()[j]) * double(query.values()[j]);
      scan.emplace_back(-s, ids[r]);
    }
    std::sort(scan.begin(), scan.end());
    const auto hits = idx.search(query, 10);
    for (std::size_t r = 0; r < 10; ++r)
      mismatches += hits.size() != 10 || hits[r].chunk_id != scan[r].second || hits[r].score != -scan[r].first;
  }
  oracle::TempDir dir;
  index::save_index(idx, store, dir.path());
  const auto loaded = index::load_index(dir.path());
  const bool bit_exact =
      loaded.index.ids() == idx.ids() && loaded.index.matrix().size() == idx.matrix().size() &&
      std::memcmp(loaded.index.matrix().data(), idx.matrix().data(), idx.matrix().size() * sizeof(float)) == 0 &&
      index::encode_index(loaded.index) == index::encode_index(idx) &&
      index::chunks_to_json(loaded.store.all()) == index::chunks_to_json(store.all());
  return {mismatches == 0 && bit_exact,
          fmt("1000 x 384, 50 queries, k = 10: %.0f ranking mismatches; save/load bit-exact: ",
              double(mismatches)) +
              (bit_exact ? "yes" : "no")};
}

// ---------------------------------------------------------------- chunker

std::string collapse_ws(const std::string& s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
    } else {
      if (space) out.push_back(' ');
      space = false;
      out.push_back(c);
    }
  }
  return out;
}

Outcome chunker_properties() {
  const std::vector<std::string> words{"model", "rates", "Dr. Smith", "e.g. yields", "coffee", "3.14",
                                       "budget", "agent", "the", "quarter"};
  const std::string ends[] = {".", "!", "?", "..."};
  std::mt19937_64 rng(200);
  int failures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<transcribe::TranscriptSegment> segments;
    std::vector<std::size_t> sentence_segment;  // segment index of each sentence
    double t = 0.0;
    const int num_segments = 1 + int(rng() % 8);
    for (int s = 0; s < num_segments; ++s) {
      std::string text;
      const int count = 1 + int(rng() % 4);
      for (int k = 0; k < count; ++k) {
        std::string sentence = "Then";
        for (int w = int(rng() % 6); w >= 0; --w) sentence += (rng() % 3 ? " " : "\t ") + words[rng() % words.size()];
        text += (k ? "  " : "") + sentence + ends[rng() % 4];
        sentence_segment.push_back(std::size_t(s));
      }
      const double start = t + double(rng() % 50) / 100.0;
      const double end = start + 0.2 + double(rng() % 400) / 100.0;
      segments.push_back({text, start, end});
      t = end;
    }
    const auto chunks = transcribe::chunk_segments(segments, 3);

    std::string all_segments, all_chunks;
    for (const auto& s : segments) all_segments += " " + s.text;
    for (const auto& c : chunks) all_chunks += " " + c.text;
    if (collapse_ws(all_segments) != collapse_ws(all_chunks)) ++failures;

    // Walk sentences in order to find each chunk's constituent segments.
    std::size_t next_sentence = 0;
    for (const auto& c : chunks) {
      const auto n = transcribe::split_sentences(c.text).size();
      if (n == 0 || n > 3 || next_sentence + n > sentence_segment.size()) {
        ++failures;
        break;
      }
      const auto& first = segments[sentence_segment[next_sentence]];
      const auto& last = segments[sentence_segment[next_sentence + n - 1]];
      if (c.start_s < first.start_s || c.end_s > last.end_s || !(c.start_s < c.end_s)) ++failures;
      next_sentence += n;
    }
  }
  return {failures == 0, fmt("200 randomized segment lists, %.0f property violations", double(failures))};
}

// ---------------------------------------------------------------- recall

std::vector<transcribe::TranscriptSegment> fixture_segments(const std::string& label) {
  return transcribe::parse_segments(slurp(kFixtures / (label + ".json")));
}

index::IndexSnapshot fixture_session() {
  index::HashEmbeddingProvider provider;
  return recall::build_index(
      {{"left", 135.0, fixture_segments("left")}, {"right", 45.0, fixture_segments("right")}}, provider);
}

std::set<std::uint64_t> ids_of(const std::vector<recall::Snippet>& snippets) {
  std::set<std::uint64_t> out;
  for (const auto& s : snippets) out.insert(s.chunk_ids.begin(), s.chunk_ids.end());
  return out;
}

std::set<std::uint64_t> ids_of(const std::map<std::string, std::vector<recall::Snippet>>& m) {
  std::set<std::uint64_t> out;
  for (const auto& [label, v] : m) {
    const auto s = ids_of(v);
    out.insert(s.begin(), s.end());
  }
  return out;
}

Outcome recall_golden() {
  const auto session = fixture_session();
  recall::StubLlm llm;
  index::HashEmbeddingProvider provider;
  const recall::RecallConfig cfg;
  const auto result = recall::answer_query(session, kAiQuery, cfg, llm, provider);

  // Every chunk of another stream that overlaps some attended chunk's interval
  // union by at least min_overlap_s, checked pair by pair.
  std::set<std::uint64_t> want;
  for (const auto& c : session.store.all()) {
    if (c.direction_label == result.attended_direction) continue;
    for (const auto& snippet : result.attended) {
      const double o = std::min(snippet.end_s, c.end_s) - std::max(snippet.start_s, c.start_s);
      if (o >= cfg.min_overlap_s) want.insert(c.chunk_id);
    }
  }
  const bool direction_ok = result.attended_direction == "right";
  const bool missed_ok = ids_of(result.missed) == want && !want.empty();
  const bool golden_ok = recall::to_json(result) == slurp(kFixtures / "golden_ai_query.json");
  return {direction_ok && missed_ok && golden_ok,
          std::string("attended ") + result.attended_direction + " (want right), missed set " +
              (missed_ok ? "equals" : "differs from") + " the pairwise oracle (" + std::to_string(want.size()) +
              " chunks), golden JSON " + (golden_ok ? "byte-identical" : "differs")};
}

class ScriptedLlm final : public recall::LlmBackend {
 public:
  std::set<std::string> relevant;
  std::string extract_topic(const std::string&) override { return "AI"; }
  bool is_relevant(const std::string&, const std::string& text) override { return relevant.contains(text); }
  std::string summarize(const std::string&, const std::vector<recall::Snippet>&,
                        const std::map<std::string, std::vector<recall::Snippet>>&) override {
    return "";
  }
  std::string kind() const override { return "scripted"; }
};

Outcome recall_monotonicity() {
  const auto session = fixture_session();
  index::HashEmbeddingProvider provider;
  std::mt19937_64 rng(50);
  int window_violations = 0, overlap_violations = 0;
  for (int trial = 0; trial < 50; ++trial) {
    ScriptedLlm llm;
    for (const auto& c : session.store.stream("right"))
      if (c.stream_position == 0 || rng() % 3 == 0) llm.relevant.insert(c.text);
    recall::RecallConfig base;
    base.top_k = 1 + int(rng() % 12);
    base.window_k = int(rng() % 4);
    base.min_overlap_s = 0.1 + double(rng() % 40) / 10.0;

    auto wider = base;
    wider.window_k += 1 + int(rng() % 3);
    auto looser = base;
    looser.min_overlap_s = std::max(0.01, base.min_overlap_s - 0.1 - double(rng() % 30) / 10.0);

    const auto r0 = recall::answer_query(session, "q", base, llm, provider);
    const auto rw = recall::answer_query(session, "q", wider, llm, provider);
    const auto rl = recall::answer_query(session, "q", looser, llm, provider);
    const auto a0 = ids_of(r0.attended), aw = ids_of(rw.attended);
    window_violations += !std::includes(aw.begin(), aw.end(), a0.begin(), a0.end());
    const auto m0 = ids_of(r0.missed), ml = ids_of(rl.missed);
    overlap_violations += !std::includes(ml.begin(), ml.end(), m0.begin(), m0.end());
  }
  return {window_violations == 0 && overlap_violations == 0,
          fmt("50 configs: %.0f attended-set shrinks under larger window_k, %.0f missed-set shrinks under "
              "smaller min_overlap_s",
              double(window_violations), double(overlap_violations))};
}

// ---------------------------------------------------------------- CLI/API

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

std::string run_cli(const std::string& args, int& status) {
  const std::string cmd = std::string(BR_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("cannot start the CLI");
  std::string out;
  std::array<char, 4096> buf{};
  while (const auto n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  status = WEXITSTATUS(pclose(pipe));
  return out;
}

Outcome cli_api_parity() {
  oracle::TempDir tmp;
  auto cfg = service::parse_config("", [](const std::string&) { return std::nullopt; });
  cfg.sessions_root = tmp / "sessions";
  cfg.asr_fixture_dir = kFixtures;
  cfg.port = 0;

  auto spec = two_talkers(64.0);
  const auto wav = audio::encode_wav(scene::simulate_scene(spec).mixture, audio::WavEncoding::Float32);
  service::IngestPlan plan;
  plan.directions = {{"left", 135.0}, {"right", 45.0}};
  service::SessionStore store(cfg.sessions_root);
  const auto id = store.ingest(wav, plan, {cfg.separation, cfg.max_sentences}, service::make_backends(cfg));

  service::ApiServer server(cfg);
  server.bind();
  std::thread serving([&] { server.serve(); });
  httplib::Client client("127.0.0.1", server.port());
  for (int i = 0; i < 100 && !client.Get("/sessions"); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(20));

  const std::vector<std::pair<std::string, std::string>> queries{
      {kAiQuery, ""},
      {"What did I miss about the bond yields?", ""},
      {"What happened during the mortgage discussion?", ""},
      {"What did I miss regarding the AI assistant?", "--window-k 0"},
      {"Summarize what I missed while listening to the coffee chat", ""},
      {"What was said concerning rates?", "--top-k 3"},
      {"What did I miss on the portfolio?", "--min-overlap 2"},
      {"What did I miss following the refunds talk?", "--window-k 4"},
      {"What did I miss about the central bank?", "--relevance-mode threshold --relevance-threshold 0.05"},
      {"What did I miss about training the AI on billing?", ""},
  };
  const std::vector<json> overrides{json::object(),
                                    json::object(),
                                    json::object(),
                                    {{"window_k", 0}},
                                    json::object(),
                                    {{"top_k", 3}},
                                    {{"min_overlap_s", 2.0}},
                                    {{"window_k", 4}},
                                    {{"relevance_mode", "threshold"}, {"relevance_threshold", 0.05}},
                                    json::object()};
  int identical = 0;
  std::string first_diff;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    int rc = -1;
    const auto from_cli = run_cli("query --session " + id + " --q " + shell_quote(queries[i].first) + " " +
                                      queries[i].second + " --sessions " +
                                      shell_quote(cfg.sessions_root.string()) + " --fixture-dir " +
                                      shell_quote(kFixtures.string()),
                                  rc);
    const auto r = client.Post("/sessions/" + id + "/query",
                               json{{"query", queries[i].first}, {"config", overrides[i]}}.dump(),
                               "application/json");
    const bool same = rc == 0 && r && r->status == 200 && r->body == from_cli;
    identical += same;
    if (!same && first_diff.empty()) first_diff = queries[i].first;
  }
  server.stop();
  serving.join();
  return {identical == 10, fmt("%.0f of 10 queries byte-identical", double(identical)) +
                               (first_diff.empty() ? "" : ", first difference: \"" + first_diff + "\"")};
}

}  // namespace

int main() {
  run("mvdr_correctness", 10.0, mvdr_correctness);
  run("mvdr_identity_covariance", 0.0, identity_reduction);
  run("doa_accuracy", 30.0, doa_accuracy);
  run("beamforming_gain", 120.0, beamforming_gain);
  run("stft_round_trip", 5.0, stft_round_trip);
  run("stoi_sanity", 0.0, stoi_sanity);
  run("index_exactness", 0.0, index_exactness);
  run("chunker_properties", 0.0, chunker_properties);
  run("recall_golden", 5.0, recall_golden);
  run("recall_monotonicity", 0.0, recall_monotonicity);
  run("cli_api_parity", 0.0, cli_api_parity);
  std::cout << (g_failures == 0 ? "ALL PASS" : std::to_string(g_failures) + " FAILED") << std::endl;
  return g_failures == 0 ? 0 : 1;
}
