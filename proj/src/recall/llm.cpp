// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cctype>
#include <json.hpp>
#include <set>
#include <sstream>

#include "beamrecall/error.hpp"
#include "beamrecall/recall.hpp"

namespace beamrecall::recall {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 6> kMarkers{"about",  "on",     "regarding",
                                                   "concerning", "during", "following"};
constexpr std::array<std::string_view, 9> kDeterminers{"the", "a",    "an",  "this", "that",
                                                       "these", "those", "my", "our"};
constexpr std::array<std::string_view, 14> kGenericNouns{
    "conversation", "conversations", "discussion", "discussions", "talk",   "talks", "chat",
    "chats",        "podcast",       "meeting",    "debate",      "story",  "topic", "thing"};
const std::set<std::string> kStopwords{"the", "a",   "an",   "and",  "or",   "of",  "to",
                                       "in",  "on",  "for",  "with", "about", "is", "are",
                                       "was", "were", "what", "that", "this", "it", "i",
                                       "you", "we",  "they", "my",   "our"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& list, const std::string& w) {
  return std::find(list.begin(), list.end(), w) != list.end();
}

bool is_stop_punct(char c) {
  return c == '.' || c == ',' || c == '?' || c == '!' || c == ';' || c == ':';
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return s;
}

struct Word {
  std::string text;  // without surrounding quotes or punctuation
  std::string key;   // lowercased text
  bool ends_clause = false;
};

std::vector<Word> words_of(const std::string& query) {
  std::vector<Word> out;
  std::istringstream in(query);
  std::string raw;
  while (in >> raw) {
    Word w;
    std::size_t b = 0, e = raw.size();
    while (b < e && !std::isalnum(static_cast<unsigned char>(raw[b])) &&
           static_cast<unsigned char>(raw[b]) < 0x80)
      ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(raw[e - 1])) &&
           static_cast<unsigned char>(raw[e - 1]) < 0x80) {
      if (is_stop_punct(raw[e - 1])) w.ends_clause = true;
      --e;
    }
    w.text = raw.substr(b, e - b);
    w.key = lower(w.text);
    out.push_back(std::move(w));
  }
  return out;
}

// Topic phrase starting at word `from`, or empty.
std::string phrase_after(const std::vector<Word>& words, std::size_t from) {
  std::vector<const Word*> picked;
  for (std::size_t i = from; i < words.size(); ++i) {
    if (!words[i].text.empty()) picked.push_back(&words[i]);
    if (words[i].ends_clause) break;
  }
  while (!picked.empty() && contains(kDeterminers, picked.front()->key)) picked.erase(picked.begin());
  while (!picked.empty() && contains(kGenericNouns, picked.back()->key)) picked.pop_back();
  std::string out;
  for (const auto* w : picked) out += (out.empty() ? "" : " ") + w->text;
  return out;
}

std::size_t utf8_prefix_bytes(const std::string& s, std::size_t max_chars) {
  std::size_t chars = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
      if (chars == max_chars) return i;
      ++chars;
    }
  }
  return s.size();
}

std::string nothing_missed(const std::string& topic, const std::vector<Snippet>& attended) {
  const std::string dir = attended.empty() ? "" : attended.front().direction_label;
  return "- While you were listening to " + topic + " (" + dir +
         "), nothing was missed in the overlapping intervals.";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

}  // namespace

std::string StubLlm::extract_topic(const std::string& query) {
  const auto words = words_of(query);
  // Marker positions, each recorded as the index of the first topic word.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i].ends_clause) continue;
    if (contains(kMarkers, words[i].key)) starts.push_back(i + 1);
    if (words[i].key == "listening" && i + 1 < words.size() && words[i + 1].key == "to" &&
        !words[i + 1].ends_clause)
      starts.push_back(i + 2);
  }
  for (auto it = starts.rbegin(); it != starts.rend(); ++it) {
    auto topic = phrase_after(words, *it);
    if (!topic.empty()) return topic;
  }
  throw Error(ErrorCode::NoTopic, "no topic marker found in query: " + query);
}

bool StubLlm::is_relevant(const std::string& topic, const std::string& chunk_text) {
  const auto chunk_tokens = index::tokenize(chunk_text);
  const std::set<std::string> have(chunk_tokens.begin(), chunk_tokens.end());
  for (const auto& t : index::tokenize(topic))
    if (!kStopwords.contains(t) && have.contains(t)) return true;
  return false;
}

std::string StubLlm::summarize(const std::string& topic, const std::vector<Snippet>& attended,
                               const std::map<std::string, std::vector<Snippet>>& missed) {
  std::string out;
  const std::string dir = attended.empty() ? "" : attended.front().direction_label;
  for (const auto& [label, snippets] : missed)
    for (const auto& s : snippets) {
      if (!out.empty()) out += "\n";
      out += "- While you were listening to " + topic + " (" + dir + "), you missed (" + label +
             "): " + s.text.substr(0, utf8_prefix_bytes(s.text, 200));
    }
  return out.empty() ? nothing_missed(topic, attended) : out;
}

std::string chat_complete(const ChatConfig& config, const std::vector<ChatMessage>& messages) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  const json req{{"model", config.model}, {"temperature", 0}, {"messages", msgs}};
  const auto body = net::post_json(config.endpoint, req.dump(), config.retry);
  try {
    const auto doc = json::parse(body);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("unexpected chat reply: ") + e.what());
  }
}

std::string RemoteChatLlm::extract_topic(const std::string& query) {
  const auto reply = chat_complete(
      config_, {{"system",
                 "Extract the topic of the user's question about a conversation they were "
                 "listening to. Reply with the topic only, in at most 8 words."},
                {"user", query}});
  auto line = trim(reply.substr(0, reply.find('\n')));
  std::istringstream in(line);
  std::string word, topic;
  for (int n = 0; n < 8 && in >> word; ++n) topic += (topic.empty() ? "" : " ") + word;
  while (!topic.empty() && (std::ispunct(static_cast<unsigned char>(topic.back())))) topic.pop_back();
  while (!topic.empty() && (topic.front() == '"' || topic.front() == '\'')) topic.erase(0, 1);
  if (topic.empty()) throw Error(ErrorCode::NoTopic, "language model returned no topic");
  return topic;
}

bool RemoteChatLlm::is_relevant(const std::string& topic, const std::string& chunk_text) {
  const auto reply = chat_complete(
      config_, {{"system", "Answer with a single word: yes or no."},
                {"user", "Topic: " + topic + "\n\nTranscript excerpt:\n" + chunk_text +
                             "\n\nIs this excerpt about the topic?"}});
  return lower(trim(reply)).starts_with("yes");
}

std::string RemoteChatLlm::summarize(const std::string& topic, const std::vector<Snippet>& attended,
                                     const std::map<std::string, std::vector<Snippet>>& missed) {
  if (missed.empty()) return nothing_missed(topic, attended);
  std::string prompt = "Topic the listener followed: " + topic + "\n";
  const std::string dir = attended.empty() ? "" : attended.front().direction_label;
  prompt += "Attended direction: " + dir + "\nAttended transcript:\n";
  for (const auto& s : attended) prompt += s.text + "\n";
  prompt += "\nMissed conversations:\n";
  for (const auto& [label, snippets] : missed)
    for (const auto& s : snippets) prompt += "[" + label + "] " + s.text + "\n";
  return trim(chat_complete(
      config_,
      {{"system",
        "You tell a listener what they missed in nearby conversations. Write one bullet per "
        "missed conversation in the form \"While you were listening to X, you missed Y.\" "
        "Name the direction label in brackets for every missed conversation."},
       {"user", prompt}}));
}

}  // namespace beamrecall::recall
