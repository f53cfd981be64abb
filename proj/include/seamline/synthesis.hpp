#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "seamline/corpus.hpp"
#include "seamline/rng.hpp"

namespace seamline {

/// One of the six fill-in templates (1: H->G, 2: G->H, 3: H->G->H,
/// 4: G->H->G, 5: H->G->H->G, 6: G->H->G->H).
struct FillTaskSpec {
  int task_id = 1;
  std::vector<AuthorLabel> structure;
  std::size_t expected_boundaries = 1;
};

FillTaskSpec fill_task(int task_id);

/// Inclusive 1-based sentence range.
struct SentenceSpan {
  std::size_t start = 1;
  std::size_t end = 1;
  std::size_t size() const { return end + 1 - start; }
  friend bool operator==(const SentenceSpan&, const SentenceSpan&) = default;
};

struct RemovalPlan {
  int task_id = 1;
  std::size_t source_size = 0;
  /// One span per human segment of the final structure, in order.
  std::vector<SentenceSpan> kept_spans;
  std::size_t removed_count = 0;
  /// Removed-sentence count of each removal event (two for tasks 5/6).
  std::vector<std::size_t> removal_events;
  /// Removed-sentence count behind each generated segment of the final
  /// structure, in order. Used as a length hint for generators.
  std::vector<std::size_t> fill_sizes;
  /// Tasks 5/6 only: the human spans of the intermediate H1->G->H2 stage.
  std::vector<SentenceSpan> first_stage_spans;
};

/// Draws a removal plan for a k-sentence source. Each removal event draws
/// its count uniformly from the range its structure permits within
/// [1, k'-1]; removed positions are contiguous blocks. Throws SourceTooShort.
RemovalPlan plan_removal(std::size_t source_sentence_count, const FillTaskSpec& task, Rng& rng);

/// Minimum source length for which plan_removal can succeed.
std::size_t min_source_sentences(int task_id);

/// A piece of the requested document: either text that must be kept
/// verbatim, or a generated span to be filled in.
struct Slot {
  AuthorLabel label = AuthorLabel::Human;
  bool fixed = true;
  std::vector<std::string> sentences;   // fixed slots only
  std::size_t target_sentences = 0;     // fill slots only (hint)

  static Slot keep(AuthorLabel label, std::vector<std::string> sentences);
  static Slot fill(std::size_t target_sentences);
};

struct Prompt {
  std::string instructions;
  std::string directive;
  std::string text() const;
};

/// Two-part prompt: the essay instructions followed by the structural
/// directive for this task stage. Tasks 5 and 6 use the task-3 directive
/// for their first stage (three slots) and a begin-with / use-as-ending
/// directive over the whole intermediate essay for the second.
Prompt build_prompt(const FillTaskSpec& task, const std::string& instructions,
                    const std::vector<Slot>& slots);

enum class ValidationReason { Ok, EmptyCandidate, StructureMismatch, EmptySegment, DuplicateSentence };

std::string_view reason_code(ValidationReason reason);

struct ValidationResult {
  ValidationReason reason = ValidationReason::Ok;
  std::vector<std::pair<std::string, AuthorLabel>> sentences;
  bool valid() const { return reason == ValidationReason::Ok; }
};

/// Checks a generated candidate against the slot layout after whitespace
/// normalization: every fixed slot verbatim and in order, every fill slot
/// non-empty, and no two sentences equal after case folding.
ValidationResult validate_generation(const std::string& candidate, const std::vector<Slot>& slots);

struct GenerationRequest {
  std::string instructions;
  std::string directive;
  std::vector<Slot> slots;
  std::size_t max_tokens = 1024;
};

/// Anything that can fill in an incomplete essay. Implementations throw
/// Error{GeneratorUnavailable} when the backend cannot be reached.
class SentenceGenerator {
 public:
  virtual ~SentenceGenerator() = default;
  virtual std::string generate(const GenerationRequest& request) = 0;
  virtual bool concurrent_safe() const { return false; }
  virtual std::string id() const = 0;
};

struct SynthesisOutcome {
  std::optional<HybridDocument> document;
  std::size_t attempts_used = 0;
  std::vector<ValidationReason> failures;
  bool skipped() const { return !document.has_value(); }
};

inline constexpr std::size_t kMaxSynthesisAttempts = 5;

/// plan -> prompt -> generate -> validate, retried up to max_attempts
/// times. Returns a skipped outcome when every attempt is invalid.
SynthesisOutcome synthesize_hybrid(const RawEssay& source, const FillTaskSpec& task,
                                   SentenceGenerator& generator, Rng& rng,
                                   std::size_t max_attempts = kMaxSynthesisAttempts);

std::string hybrid_doc_id(const RawEssay& source, int task_id);

struct SynthesisLogEntry {
  std::string source_id;
  int task_id = 0;
  bool accepted = false;
  std::size_t attempts = 0;
  std::vector<std::string> reasons;  // reason codes, one per failed attempt
};

struct CorpusSynthesis {
  std::vector<HybridDocument> documents;
  std::vector<SynthesisLogEntry> log;
  std::size_t filtered_out = 0;  // sources rejected by the source filter
};

/// Filters the sources, assigns task_ids[i % size] to the i-th kept source
/// and synthesizes one hybrid document each. Each source draws from its
/// own seeded stream, so the result does not depend on scheduling; work
/// runs in parallel only when the generator is concurrent_safe().
CorpusSynthesis synthesize_corpus(const std::vector<RawEssay>& sources, const std::vector<int>& task_ids,
                                  SentenceGenerator& generator, std::uint64_t seed,
                                  std::size_t max_attempts = kMaxSynthesisAttempts);

}  // namespace seamline
