// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cctype>

#include "beamrecall/transcribe.hpp"

namespace beamrecall::transcribe {
namespace {

constexpr std::array<std::string_view, 7> kAbbreviations{"dr.", "mr.", "mrs.", "ms.",
                                                         "e.g.", "i.e.", "etc."};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

// True when the word ending at `dot` (inclusive) is a guarded abbreviation.
bool abbreviation_at(std::string_view text, std::size_t dot) {
  std::size_t start = dot;
  while (start > 0 && !is_space(text[start - 1])) --start;
  std::string word(text.substr(start, dot - start + 1));
  // Leading punctuation such as an opening quote does not count.
  while (!word.empty() && !std::isalnum(static_cast<unsigned char>(word.front())))
    word.erase(word.begin());
  std::transform(word.begin(), word.end(), word.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

}  // namespace

std::vector<SentenceSpan> sentence_spans(std::string_view text) {
  std::vector<SentenceSpan> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto skip_space = [&] {
    while (i < n && is_space(text[i])) ++i;
  };
  skip_space();
  std::size_t begin = i;
  while (i < n) {
    if (!is_terminal(text[i])) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < n && is_terminal(text[end])) ++end;
    while (end < n && is_closer(text[end])) ++end;
    const bool boundary = end == n || is_space(text[end]);
    const bool guarded = text[end - 1] == '.' && end - 1 == i && abbreviation_at(text, i);
    if (boundary && !guarded) {
      out.push_back({begin, end});
      i = end;
      skip_space();
      begin = i;
    } else {
      i = end;
    }
  }
  if (begin < n) {
    std::size_t end = n;
    while (end > begin && is_space(text[end - 1])) --end;
    if (end > begin) out.push_back({begin, end});
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& s : sentence_spans(text))
    out.push_back(normalize_whitespace(text.substr(s.begin, s.end - s.begin)));
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace beamrecall::transcribe
