#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace seamline {

enum class AuthorLabel { Human, Generated };

/// "H" / "G".
std::string_view label_code(AuthorLabel label);
std::optional<AuthorLabel> parse_label(std::string_view code);

struct Sentence {
  std::string text;
  std::size_t index = 0;  // 1-based within the document
  std::optional<AuthorLabel> label;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct HybridDocument {
  std::string doc_id;
  int prompt_id = 0;
  std::string source_id;
  std::vector<Sentence> sentences;
  std::optional<int> task_id;

  std::size_t size() const noexcept { return sentences.size(); }
  bool fully_labeled() const noexcept;
  std::vector<std::string> texts() const;

  friend bool operator==(const HybridDocument&, const HybridDocument&) = default;
};

/// Builds a document from (text, label) pairs, numbering sentences from 1.
HybridDocument make_document(std::string doc_id, int prompt_id, std::string source_id,
                             const std::vector<std::pair<std::string, std::optional<AuthorLabel>>>& sentences,
                             std::optional<int> task_id = std::nullopt);

/// Positions i in [1, n-1] where label(s_i) != label(s_{i+1}), ascending.
/// Throws UnlabeledSentence if any label is missing.
std::vector<std::size_t> ground_truth_boundaries(const HybridDocument& doc);

/// Same rule applied to a bare label sequence.
std::vector<std::size_t> label_transitions(const std::vector<AuthorLabel>& labels);

/// Boundary count expected for fill task 1..6 (1,1,2,2,3,3).
std::size_t expected_boundaries_for_task(int task_id);

struct RawEssay {
  std::string source_id;
  int prompt_id = 0;
  std::string text;
  std::string instructions;
};

std::size_t word_count(std::string_view text);

/// Keeps essays with more than 100 words and no token starting with '@'.
std::vector<RawEssay> filter_source_essays(const std::vector<RawEssay>& essays);
bool passes_source_filter(std::string_view text);

struct StatsCell {
  std::size_t doc_count = 0;
  double words_per_doc = 0.0;
  double sentences_per_doc = 0.0;
  double mean_len_generated = 0.0;
  double mean_len_human = 0.0;
  double generated_ratio = 0.0;
};

struct CorpusStats {
  StatsCell all;
  /// Keyed by "1", "2", "3" and "other".
  std::map<std::string, StatsCell> breakdown;
};

/// Boundary-count bucket name: "1", "2", "3" or "other".
std::string boundary_bucket(std::size_t boundary_count);

CorpusStats corpus_stats(const std::vector<HybridDocument>& docs);

}  // namespace seamline
