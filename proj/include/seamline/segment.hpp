#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seamline/corpus.hpp"

namespace seamline {

/// Version tag of the abbreviation list below; bump when the list changes.
inline constexpr std::string_view kSegmenterVersion = "abbrev-v1";

/// Tokens that end in '.' without ending a sentence (compared case-insensitively,
/// without the trailing period).
std::span<const std::string_view> segmenter_abbreviations();

/// Rule-based sentence splitter. A sentence ends at '.', '!' or '?' (plus any
/// run of terminators and closing quotes/brackets) that is followed by
/// whitespace and then an uppercase letter, optionally behind an opening
/// quote or bracket, or by end of text. A period does not end a sentence
/// after a listed abbreviation or a single-letter initial.
///
/// Returned sentences are trimmed and numbered from 1, unlabeled.
/// Throws EmptyText if the text is blank.
std::vector<Sentence> segment_text(std::string_view text);

/// Convenience: just the sentence strings.
std::vector<std::string> split_sentences(std::string_view text);

/// Collapses whitespace runs to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

}  // namespace seamline
