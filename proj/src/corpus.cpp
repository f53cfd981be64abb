#include "seamline/corpus.hpp"

#include <algorithm>
#include <cctype>

#include "seamline/error.hpp"

namespace seamline {

std::string_view label_code(AuthorLabel label) {
  return label == AuthorLabel::Human ? "H" : "G";
}

std::optional<AuthorLabel> parse_label(std::string_view code) {
  if (code == "H") return AuthorLabel::Human;
  if (code == "G") return AuthorLabel::Generated;
  return std::nullopt;
}

bool HybridDocument::fully_labeled() const noexcept {
  return std::all_of(sentences.begin(), sentences.end(),
                     [](const Sentence& s) { return s.label.has_value(); });
}

std::vector<std::string> HybridDocument::texts() const {
  std::vector<std::string> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(s.text);
  return out;
}

HybridDocument make_document(std::string doc_id, int prompt_id, std::string source_id,
                             const std::vector<std::pair<std::string, std::optional<AuthorLabel>>>& sentences,
                             std::optional<int> task_id) {
  HybridDocument doc;
  doc.doc_id = std::move(doc_id);
  doc.prompt_id = prompt_id;
  doc.source_id = std::move(source_id);
  doc.task_id = task_id;
  std::size_t index = 1;
  for (const auto& [text, label] : sentences) {
    doc.sentences.push_back(Sentence{text, index++, label});
  }
  return doc;
}

std::vector<std::size_t> label_transitions(const std::vector<AuthorLabel>& labels) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (labels[i - 1] != labels[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> ground_truth_boundaries(const HybridDocument& doc) {
  std::vector<AuthorLabel> labels;
  labels.reserve(doc.size());
  for (const auto& s : doc.sentences) {
    if (!s.label) {
      fail(Errc::UnlabeledSentence,
           "document " + doc.doc_id + " sentence " + std::to_string(s.index) + " has no label");
    }
    labels.push_back(*s.label);
  }
  return label_transitions(labels);
}

std::size_t expected_boundaries_for_task(int task_id) {
  switch (task_id) {
    case 1:
    case 2: return 1;
    case 3:
    case 4: return 2;
    case 5:
    case 6: return 3;
    default: fail(Errc::InvalidArgument, "task id must be in 1..6, got " + std::to_string(task_id));
  }
}

std::size_t word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

bool passes_source_filter(std::string_view text) {
  if (word_count(text) <= 100) return false;
  bool at_token_start = true;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      at_token_start = true;
      continue;
    }
    if (at_token_start && c == '@') return false;
    at_token_start = false;
  }
  return true;
}

std::vector<RawEssay> filter_source_essays(const std::vector<RawEssay>& essays) {
  std::vector<RawEssay> kept;
  std::copy_if(essays.begin(), essays.end(), std::back_inserter(kept),
               [](const RawEssay& e) { return passes_source_filter(e.text); });
  return kept;
}

std::string boundary_bucket(std::size_t boundary_count) {
  if (boundary_count >= 1 && boundary_count <= 3) return std::to_string(boundary_count);
  return "other";
}

namespace {

struct StatsAccumulator {
  std::size_t docs = 0;
  double words = 0.0;
  double sentences = 0.0;
  double generated_words = 0.0;
  double generated_sentences = 0.0;
  double human_words = 0.0;
  double human_sentences = 0.0;
  double ratio_sum = 0.0;

  void add(const HybridDocument& doc) {
    ++docs;
    double doc_generated = 0.0;
    for (const auto& s : doc.sentences) {
      const auto w = static_cast<double>(word_count(s.text));
      words += w;
      if (*s.label == AuthorLabel::Generated) {
        generated_words += w;
        generated_sentences += 1.0;
        doc_generated += 1.0;
      } else {
        human_words += w;
        human_sentences += 1.0;
      }
    }
    sentences += static_cast<double>(doc.size());
    ratio_sum += doc.size() == 0 ? 0.0 : doc_generated / static_cast<double>(doc.size());
  }

  StatsCell finish() const {
    StatsCell cell;
    cell.doc_count = docs;
    if (docs == 0) return cell;
    const auto n = static_cast<double>(docs);
    cell.words_per_doc = words / n;
    cell.sentences_per_doc = sentences / n;
    cell.mean_len_generated = generated_sentences > 0 ? generated_words / generated_sentences : 0.0;
    cell.mean_len_human = human_sentences > 0 ? human_words / human_sentences : 0.0;
    cell.generated_ratio = ratio_sum / n;
    return cell;
  }
};

}  // namespace

CorpusStats corpus_stats(const std::vector<HybridDocument>& docs) {
  if (docs.empty()) fail(Errc::EmptyCorpus, "cannot compute statistics of an empty corpus");
  StatsAccumulator all;
  std::map<std::string, StatsAccumulator> buckets;
  for (const auto& doc : docs) {
    const auto bucket = boundary_bucket(ground_truth_boundaries(doc).size());
    all.add(doc);
    buckets[bucket].add(doc);
  }
  CorpusStats stats;
  stats.all = all.finish();
  for (const auto& [key, acc] : buckets) stats.breakdown[key] = acc.finish();
  return stats;
}

}  // namespace seamline
