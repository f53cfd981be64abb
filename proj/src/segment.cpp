#include "seamline/segment.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "seamline/error.hpp"

namespace seamline {

namespace {

constexpr std::array<std::string_view, 27> kAbbreviations = {
    "mr",  "mrs", "ms",   "dr",  "prof", "sr",   "jr",  "st",   "mt",
    "gen", "col", "capt", "lt",  "sgt",  "rev",  "hon", "gov",  "sen",
    "rep", "pres", "vs",  "e.g", "i.e",  "inc",  "ltd", "corp", "u.s",
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
bool is_opener(char c) { return c == '"' || c == '\'' || c == '(' || c == '['; }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// The token immediately before the period at `dot`, minus leading openers.
std::string_view token_before(std::string_view text, std::size_t dot) {
  std::size_t start = dot;
  while (start > 0 && !is_space(text[start - 1])) --start;
  while (start < dot && is_opener(text[start])) ++start;
  return text.substr(start, dot - start);
}

bool period_is_abbreviation(std::string_view text, std::size_t dot) {
  const auto token = token_before(text, dot);
  if (token.empty()) return false;
  if (token.size() == 1 && is_upper(token[0])) return true;  // initial
  const auto key = lower(token);
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), key) != kAbbreviations.end();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

std::span<const std::string_view> segmenter_abbreviations() { return kAbbreviations; }

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
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

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto emit = [&](std::size_t end) {
    const auto piece = trim(text.substr(start, end - start));
    if (!piece.empty()) out.emplace_back(piece);
    start = end;
  };
  while (i < n) {
    if (!is_terminator(text[i])) {
      ++i;
      continue;
    }
    const std::size_t first_terminator = i;
    while (i < n && is_terminator(text[i])) ++i;
    const bool lone_period = i - first_terminator == 1 && text[first_terminator] == '.';
    while (i < n && is_closer(text[i])) ++i;
    const std::size_t end = i;
    std::size_t j = i;
    while (j < n && is_space(text[j])) ++j;
    bool boundary = false;
    if (j == n) {
      boundary = true;
    } else if (j > end) {
      std::size_t k = j;
      while (k < n && is_opener(text[k])) ++k;
      boundary = k < n && is_upper(text[k]);
    }
    if (boundary && lone_period && period_is_abbreviation(text, first_terminator)) {
      boundary = false;
    }
    if (boundary) emit(end);
  }
  emit(n);
  return out;
}

std::vector<Sentence> segment_text(std::string_view text) {
  auto pieces = split_sentences(text);
  if (pieces.empty()) fail(Errc::EmptyText, "no sentence could be produced from the input");
  std::vector<Sentence> out;
  out.reserve(pieces.size());
  std::size_t index = 1;
  for (auto& p : pieces) out.push_back(Sentence{std::move(p), index++, std::nullopt});
  return out;
}

}  // namespace seamline
