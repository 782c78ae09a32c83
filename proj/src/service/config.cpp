// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "beamrecall/service.hpp"

namespace beamrecall::service {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>> kKnownKeys{
    {"", {"host", "port", "sessions_root", "static_dir", "api_token"}},
    {"server", {"host", "port", "sessions_root", "static_dir", "api_token"}},
    {"asr", {"kind", "fixture_dir", "url", "token", "model", "max_in_flight"}},
    {"embedding", {"kind", "dim", "url", "token", "model"}},
    {"llm", {"kind", "url", "token", "model"}},
    {"recall", {"top_k", "window_k", "min_overlap_s", "relevance_mode", "relevance_threshold"}},
    {"retry", {"attempts", "initial_backoff_ms"}},
    {"ingest", {"window_size", "hop_size", "loading_factor", "speed_of_sound", "max_sentences"}},
};

std::string unquote(std::string v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\'')))
    return v.substr(1, v.size() - 2);
  return v;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const pt::ptree* node = &tree_;
    if (!section.empty()) {
      const auto child = tree_.get_child_optional(section);
      if (!child) return std::nullopt;
      node = &*child;
    }
    const auto v = node->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return unquote(*v);
  }

  void str(const std::string& section, const std::string& key, std::string& out) const {
    if (auto v = get(section, key)) out = *v;
  }
  void path(const std::string& section, const std::string& key, std::filesystem::path& out) const {
    if (auto v = get(section, key)) out = *v;
  }
  template <typename T>
  void num(const std::string& section, const std::string& key, T& out) const {
    const auto v = get(section, key);
    if (!v) return;
    std::istringstream in(*v);
    T parsed{};
    if (!(in >> parsed) || !(in >> std::ws).eof())
      throw Error(ErrorCode::BadConfig, "[" + section + "] " + key + " is not a number: " + *v);
    out = parsed;
  }

 private:
  const pt::ptree& tree_;
};

template <typename E>
E parse_kind(const std::optional<std::string>& v, const std::map<std::string, E>& names, E fallback,
             const std::string& what) {
  if (!v) return fallback;
  const auto it = names.find(*v);
  if (it == names.end()) throw Error(ErrorCode::BadConfig, "unknown " + what + " kind: " + *v);
  return it->second;
}

}  // namespace

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

ServiceConfig parse_config(const std::string& text, const EnvLookup& env) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::BadConfig, std::string("config parse error: ") + e.what());
  }
  for (const auto& [name, node] : tree) {
    const bool is_section = !node.empty();
    const auto section = kKnownKeys.find(is_section ? name : "");
    if (section == kKnownKeys.end()) throw Error(ErrorCode::BadConfig, "unknown config section [" + name + "]");
    if (!is_section) {
      if (!section->second.contains(name)) throw Error(ErrorCode::BadConfig, "unknown config key " + name);
      continue;
    }
    for (const auto& [key, value] : node) {
      (void)value;
      if (!section->second.contains(key))
        throw Error(ErrorCode::BadConfig, "unknown config key [" + name + "] " + key);
    }
  }

  ServiceConfig c;
  const Reader r(tree);
  for (const std::string s : {"", "server"}) {
    r.str(s, "host", c.host);
    r.num(s, "port", c.port);
    r.path(s, "sessions_root", c.sessions_root);
    r.path(s, "static_dir", c.static_dir);
    r.str(s, "api_token", c.api_token);
  }

  c.asr_kind = parse_kind<AsrKind>(r.get("asr", "kind"),
                                   {{"fixture", AsrKind::Fixture}, {"fixture-file", AsrKind::Fixture},
                                    {"remote", AsrKind::Remote}, {"remote-http", AsrKind::Remote}},
                                   c.asr_kind, "asr");
  r.path("asr", "fixture_dir", c.asr_fixture_dir);
  r.str("asr", "url", c.asr.url);
  r.str("asr", "token", c.asr.token);
  r.str("asr", "model", c.asr.model);
  r.num("asr", "max_in_flight", c.asr_max_in_flight);

  c.embedding_kind = parse_kind<EmbeddingKind>(
      r.get("embedding", "kind"),
      {{"local", EmbeddingKind::Local}, {"local-hash", EmbeddingKind::Local},
       {"remote", EmbeddingKind::Remote}, {"remote-http", EmbeddingKind::Remote}},
      c.embedding_kind, "embedding");
  r.num("embedding", "dim", c.embedding_dim);
  r.str("embedding", "url", c.embedding.url);
  r.str("embedding", "token", c.embedding.token);
  r.str("embedding", "model", c.embedding.model);

  c.llm_kind = parse_kind<LlmKind>(r.get("llm", "kind"),
                                   {{"stub", LlmKind::Stub}, {"deterministic-stub", LlmKind::Stub},
                                    {"remote", LlmKind::Remote}, {"remote-chat", LlmKind::Remote}},
                                   c.llm_kind, "llm");
  r.str("llm", "url", c.llm.url);
  r.str("llm", "token", c.llm.token);
  r.str("llm", "model", c.llm.model);

  r.num("recall", "top_k", c.recall.top_k);
  r.num("recall", "window_k", c.recall.window_k);
  r.num("recall", "min_overlap_s", c.recall.min_overlap_s);
  c.recall.relevance_mode = parse_kind<recall::RelevanceMode>(
      r.get("recall", "relevance_mode"),
      {{"llm", recall::RelevanceMode::Llm}, {"threshold", recall::RelevanceMode::Threshold}},
      c.recall.relevance_mode, "relevance");
  r.num("recall", "relevance_threshold", c.recall.relevance_threshold);

  r.num("retry", "attempts", c.retry.attempts);
  long long backoff = c.retry.initial_backoff.count();
  r.num("retry", "initial_backoff_ms", backoff);
  c.retry.initial_backoff = std::chrono::milliseconds(backoff);

  r.num("ingest", "window_size", c.separation.stft.window_size);
  r.num("ingest", "hop_size", c.separation.stft.hop_size);
  r.num("ingest", "loading_factor", c.separation.loading_factor);
  r.num("ingest", "speed_of_sound", c.separation.speed_of_sound);
  r.num("ingest", "max_sentences", c.max_sentences);

  if (auto v = env("BEAMRECALL_API_TOKEN")) c.api_token = *v;
  if (auto v = env("BEAMRECALL_ASR_TOKEN")) c.asr.token = *v;
  if (auto v = env("BEAMRECALL_EMBEDDING_TOKEN")) c.embedding.token = *v;
  if (auto v = env("BEAMRECALL_LLM_TOKEN")) c.llm.token = *v;
  validate(c);
  return c;
}

ServiceConfig load_config(const std::filesystem::path& path, const EnvLookup& env) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), env);
}

void validate(const ServiceConfig& c) {
  if (c.port < 0 || c.port > 65535) throw Error(ErrorCode::BadConfig, "port out of range");
  if (c.asr_kind == AsrKind::Remote && c.asr.url.empty())
    throw Error(ErrorCode::BadConfig, "remote ASR needs [asr] url");
  if (c.embedding_kind == EmbeddingKind::Remote && c.embedding.url.empty())
    throw Error(ErrorCode::BadConfig, "remote embeddings need [embedding] url");
  if (c.llm_kind == LlmKind::Remote && c.llm.url.empty())
    throw Error(ErrorCode::BadConfig, "remote LLM needs [llm] url");
  if (c.embedding_dim == 0) throw Error(ErrorCode::BadConfig, "embedding dim must be positive");
  if (c.asr_max_in_flight < 1 || c.asr_max_in_flight > 64)
    throw Error(ErrorCode::BadConfig, "asr max_in_flight must be in 1..64");
  if (c.retry.attempts < 1) throw Error(ErrorCode::BadConfig, "retry attempts must be at least 1");
  if (c.retry.initial_backoff.count() < 0) throw Error(ErrorCode::BadConfig, "negative backoff");
  if (c.max_sentences < 1) throw Error(ErrorCode::BadConfig, "max_sentences must be at least 1");
  recall::validate(c.recall);
  validate_stft_config(c.separation.stft);
}

Backends make_backends(const ServiceConfig& c) {
  Backends b;
  if (c.asr_kind == AsrKind::Fixture) {
    b.asr = std::make_shared<transcribe::FixtureAsrBackend>(c.asr_fixture_dir);
  } else {
    transcribe::RemoteAsrConfig cfg;
    cfg.endpoint = {c.asr.url, c.asr.token};
    cfg.model = c.asr.model;
    cfg.retry = c.retry;
    cfg.max_in_flight = c.asr_max_in_flight;
    b.asr = std::make_shared<transcribe::RemoteAsrBackend>(cfg);
  }
  if (c.embedding_kind == EmbeddingKind::Local) {
    b.embedder = std::make_shared<index::HashEmbeddingProvider>(c.embedding_dim);
  } else {
    b.embedder = std::make_shared<index::RemoteEmbeddingProvider>(index::RemoteEmbeddingConfig{
        {c.embedding.url, c.embedding.token}, c.embedding.model, c.embedding_dim, c.retry});
  }
  if (c.llm_kind == LlmKind::Stub) {
    b.llm = std::make_shared<recall::StubLlm>();
  } else {
    b.llm = std::make_shared<recall::RemoteChatLlm>(
        recall::ChatConfig{{c.llm.url, c.llm.token}, c.llm.model, c.retry});
  }
  return b;
}

recall::RecallConfig apply_overrides(recall::RecallConfig base, const nlohmann::json& o) {
  if (o.is_null()) return base;
  if (!o.is_object()) throw Error(ErrorCode::BadConfig, "query config must be an object");
  try {
    for (const auto& [key, value] : o.items()) {
      if (key == "top_k")
        base.top_k = value.get<int>();
      else if (key == "window_k")
        base.window_k = value.get<int>();
      else if (key == "min_overlap_s")
        base.min_overlap_s = value.get<double>();
      else if (key == "relevance_threshold")
        base.relevance_threshold = value.get<double>();
      else if (key == "relevance_mode") {
        const auto mode = value.get<std::string>();
        if (mode == "llm")
          base.relevance_mode = recall::RelevanceMode::Llm;
        else if (mode == "threshold")
          base.relevance_mode = recall::RelevanceMode::Threshold;
        else
          throw Error(ErrorCode::BadConfig, "relevance_mode must be llm or threshold");
      } else {
        throw Error(ErrorCode::BadConfig, "unknown query config key " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("bad query config: ") + e.what());
  }
  recall::validate(base);
  return base;
}

}  // namespace beamrecall::service
