// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <fstream>
#include <json.hpp>
#include <random>

#include "beamrecall/error.hpp"
#include "beamrecall/transcribe.hpp"
#include "doctest.h"
#include "mock_server.hpp"
#include "oracles.hpp"

using namespace beamrecall;
using namespace beamrecall::transcribe;

namespace {

std::vector<TranscriptSegment> segs(std::initializer_list<TranscriptSegment> s) { return s; }

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("split_sentences basic cases") {
  CHECK(split_sentences("Hello. How are you? Fine!") ==
        std::vector<std::string>{"Hello.", "How are you?", "Fine!"});
  CHECK(split_sentences("Dr. Smith arrived.") == std::vector<std::string>{"Dr. Smith arrived."});
  CHECK(split_sentences("").empty());
  CHECK(split_sentences("   \n ").empty());
}

TEST_CASE("split_sentences guards and edge punctuation") {
  CHECK(split_sentences("Bring fruit, e.g. apples. Mr. and Mrs. Lee came.").size() == 2);
  CHECK(split_sentences("Pens, paper, etc. are fine. Yes.").size() == 2);
  CHECK(split_sentences("Wait... what?! Okay.") ==
        std::vector<std::string>{"Wait...", "what?!", "Okay."});
  CHECK(split_sentences("He said \"stop.\" Then left.") ==
        std::vector<std::string>{"He said \"stop.\"", "Then left."});
  CHECK(split_sentences("Version 2.5 shipped. No trailing") ==
        std::vector<std::string>{"Version 2.5 shipped.", "No trailing"});
}

TEST_CASE("split_sentences reproduces the input modulo whitespace") {
  const std::string text = "  One.  Two?\nThree!   Dr. Who  is here.  tail ";
  std::string joined;
  for (const auto& s : split_sentences(text)) joined += (joined.empty() ? "" : " ") + s;
  CHECK(joined == normalize_whitespace(text));
}

TEST_CASE("chunk_segments worked examples") {
  CHECK(chunk_segments({}).empty());

  std::vector<TranscriptSegment> seven;
  for (int i = 0; i < 7; ++i)
    seven.push_back({"Sentence number " + std::to_string(i) + ".", double(i), double(i) + 0.9});
  const auto chunks = chunk_segments(seven);
  REQUIRE(chunks.size() == 3);
  CHECK(split_sentences(chunks[0].text).size() == 3);
  CHECK(split_sentences(chunks[1].text).size() == 3);
  CHECK(split_sentences(chunks[2].text).size() == 1);
  CHECK(chunks[0].start_s == 0.0);
  CHECK(chunks[0].end_s == doctest::Approx(2.9));
  CHECK(chunks[1].start_s == 3.0);
  CHECK(chunks[2].end_s == doctest::Approx(6.9));
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    CHECK(chunks[i].chunk_id == i);
    CHECK(chunks[i].stream_position == i);
  }

  const auto abc = chunk_segments(segs({{"A. B.", 0, 4}, {"C.", 4, 6}}), 3);
  REQUIRE(abc.size() == 1);
  CHECK(abc[0].text == "A. B. C.");
  CHECK(abc[0].start_s == 0.0);
  CHECK(abc[0].end_s == 6.0);
}

TEST_CASE("a sentence spanning segments keeps both segments' extent") {
  const auto c = chunk_segments(segs({{"We talked about", 1, 2}, {"the weather. Yes.", 2, 3}}), 1);
  REQUIRE(c.size() == 2);
  CHECK(c[0].text == "We talked about the weather.");
  CHECK(c[0].start_s == 1.0);
  CHECK(c[1].end_s == 3.0);
  CHECK(c[0].end_s <= c[1].start_s);
  CHECK(c[0].end_s > 2.0);
}

// Random transcripts built from known sentences: the expected chunk texts are
// the generated sentences grouped in threes, independent of the splitter.
TEST_CASE("chunker randomized properties") {
  const std::vector<std::string> words{"alpha", "budget", "model", "rates", "coffee", "Dr. Kim",
                                       "e.g. bonds", "the", "network", "quarter", "3.5", "agent"};
  const std::string terminals[] = {".", "?", "!", "..."};
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t max_sentences = 1 + rng() % 4;
    std::vector<std::string> sentences;
    std::vector<TranscriptSegment> segments;
    std::vector<std::size_t> seg_first_sentence;
    double t = 0.0;
    const int num_segments = int(rng() % 9);
    for (int s = 0; s < num_segments; ++s) {
      std::string text;
      seg_first_sentence.push_back(sentences.size());
      const int count = 1 + int(rng() % 3);
      for (int k = 0; k < count; ++k) {
        std::string sentence = "Word";
        const int len = 1 + int(rng() % 6);
        for (int w = 0; w < len; ++w) sentence += " " + words[rng() % words.size()];
        sentence += terminals[rng() % 4];
        sentences.push_back(sentence);
        text += (rng() % 2 ? "  " : " ") + sentence;
      }
      const double start = t + double(rng() % 100) / 100.0;
      const double end = start + 0.5 + double(rng() % 300) / 100.0;
      segments.push_back({text, start, end});
      t = end;
    }

    const auto chunks = chunk_segments(segments, max_sentences);
    const std::size_t expected = (sentences.size() + max_sentences - 1) / max_sentences;
    REQUIRE(chunks.size() == expected);
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      std::string want;
      for (std::size_t k = c * max_sentences;
           k < std::min(sentences.size(), (c + 1) * max_sentences); ++k)
        want += (want.empty() ? "" : " ") + sentences[k];
      CHECK(chunks[c].text == want);
      CHECK(chunks[c].stream_position == c);
      CHECK(chunks[c].start_s < chunks[c].end_s);
      CHECK(chunks[c].start_s >= segments.front().start_s);
      CHECK(chunks[c].end_s <= segments.back().end_s);
      if (c > 0) {
        CHECK(chunks[c].start_s >= chunks[c - 1].start_s);
        CHECK(chunks[c].start_s >= chunks[c - 1].end_s);
      }
      // A chunk opening on a segment's first sentence starts with that segment.
      for (std::size_t s = 0; s < segments.size(); ++s)
        if (seg_first_sentence[s] == c * max_sentences) CHECK(chunks[c].start_s == segments[s].start_s);
    }
  }
}

TEST_CASE("parse_segments accepts arrays and verbose objects") {
  CHECK(parse_segments(R"([{"text":"hi","start":0,"end":1}])").size() == 1);
  const auto v = parse_segments(
      R"({"text":"x","segments":[{"id":0,"text":" a ","start":1.5,"end":2},{"text":"  ","start":2,"end":3}]})");
  REQUIRE(v.size() == 1);
  CHECK(v[0].start_s == 1.5);
  for (const char* bad : {"nope", R"({"text":"x"})", R"([{"text":"a","start":0}])",
                          R"([{"text":"a","start":2,"end":1}])", R"({"segments":3})"}) {
    try {
      parse_segments(bad);
      FAIL("expected MalformedResponse for " << bad);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MalformedResponse);
    }
  }
}

TEST_CASE("fixture backend echoes segments sorted") {
  oracle::TempDir dir;
  write_file(dir / "left.json",
             R"([{"text":"third","start":5,"end":6},{"text":"first","start":0,"end":1},)"
             R"({"text":"second","start":2,"end":3}])");
  FixtureAsrBackend backend(dir.path());
  CHECK(backend.kind() == "fixture-file");
  const auto out = backend.transcribe({"left", {}, 16000});
  REQUIRE(out.size() == 3);
  CHECK(out[0].text == "first");
  CHECK(out[1].text == "second");
  CHECK(out[2].text == "third");

  try {
    backend.transcribe({"right", {}, 16000});
    FAIL("expected FixtureMissing");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FixtureMissing);
  }
}

TEST_CASE("remote backend uploads WAV and sorts the reply") {
  fixtures::MockServer mock;
  std::atomic<int> calls{0};
  std::string seen_auth, seen_model;
  std::size_t seen_bytes = 0;
  mock.server().Post("/v1/audio/transcriptions",
                     [&](const httplib::Request& req, httplib::Response& res) {
                       ++calls;
                       seen_auth = req.get_header_value("Authorization");
                       seen_model = req.get_file_value("model").content;
                       seen_bytes = req.get_file_value("file").content.size();
                       res.set_content(
                           R"({"segments":[{"text":"later","start":3,"end":4},)"
                           R"({"text":"earlier","start":0.5,"end":1}]})",
                           "application/json");
                     });
  mock.start();

  RemoteAsrConfig cfg;
  cfg.endpoint = {mock.url("/v1/audio/transcriptions"), "tok", std::chrono::seconds(5)};
  cfg.retry.initial_backoff = std::chrono::milliseconds(0);
  RemoteAsrBackend backend(cfg);
  const std::vector<double> samples(1600, 0.1);
  const auto out = backend.transcribe({"left", samples, 16000});
  REQUIRE(out.size() == 2);
  CHECK(out[0].text == "earlier");
  CHECK(out[1].text == "later");
  CHECK(calls == 1);
  CHECK(seen_auth == "Bearer tok");
  CHECK(seen_model == "whisper-1");
  CHECK(seen_bytes == 44 + 2 * samples.size());
}

TEST_CASE("remote backend reports HTTP 500 after retries") {
  fixtures::MockServer mock;
  std::atomic<int> calls{0};
  mock.server().Post("/asr", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 500;
  });
  mock.start();

  RemoteAsrConfig cfg;
  cfg.endpoint = {mock.url("/asr"), "", std::chrono::seconds(5)};
  cfg.retry = {3, std::chrono::milliseconds(0)};
  RemoteAsrBackend backend(cfg);
  const std::vector<double> samples(160, 0.0);
  try {
    backend.transcribe({"x", samples, 16000});
    FAIL("expected BackendUnreachable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendUnreachable);
    CHECK(std::string(e.what()).find("3 attempts") != std::string::npos);
    CHECK(std::string(e.what()).find("500") != std::string::npos);
  }
  CHECK(calls == 3);
}

TEST_CASE("remote backend rejects malformed replies") {
  fixtures::MockServer mock;
  mock.server().Post("/asr", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"no\":1}", "application/json");
  });
  mock.start();
  RemoteAsrConfig cfg;
  cfg.endpoint = {mock.url("/asr"), "", std::chrono::seconds(5)};
  RemoteAsrBackend backend(cfg);
  const std::vector<double> samples(160, 0.0);
  CHECK_THROWS_AS(backend.transcribe({"x", samples, 16000}), Error);
}

TEST_CASE("remote backend caps requests in flight") {
  fixtures::MockServer mock;
  std::atomic<int> active{0}, peak{0};
  mock.server().new_task_queue = [] { return new httplib::ThreadPool(8); };
  mock.server().Post("/asr", [&](const httplib::Request&, httplib::Response& res) {
    const int now = ++active;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(60));
    --active;
    res.set_content("[]", "application/json");
  });
  mock.start();
  RemoteAsrConfig cfg;
  cfg.endpoint = {mock.url("/asr"), "", std::chrono::seconds(5)};
  cfg.max_in_flight = 2;
  RemoteAsrBackend backend(cfg);
  const std::vector<double> samples(160, 0.0);
  std::vector<std::thread> threads;
  for (int i = 0; i < 6; ++i)
    threads.emplace_back([&] { backend.transcribe({"x", samples, 16000}); });
  for (auto& t : threads) t.join();
  CHECK(peak.load() <= 2);
  CHECK(peak.load() >= 1);
}
