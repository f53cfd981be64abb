#include "seamline/synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "seamline/error.hpp"
#include "seamline/parallel.hpp"
#include "seamline/segment.hpp"

namespace seamline {

namespace {

constexpr auto H = AuthorLabel::Human;
constexpr auto G = AuthorLabel::Generated;

std::size_t draw(Rng& rng, std::size_t lo, std::size_t hi) {
  return static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out.push_back(' ');
    out += p;
  }
  return out;
}

std::string fold(std::string_view s) {
  auto out = normalize_whitespace(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string quoted(const std::string& text) { return "\"" + text + "\""; }

}  // namespace

FillTaskSpec fill_task(int task_id) {
  FillTaskSpec spec;
  spec.task_id = task_id;
  switch (task_id) {
    case 1: spec.structure = {H, G}; break;
    case 2: spec.structure = {G, H}; break;
    case 3: spec.structure = {H, G, H}; break;
    case 4: spec.structure = {G, H, G}; break;
    case 5: spec.structure = {H, G, H, G}; break;
    case 6: spec.structure = {G, H, G, H}; break;
    default: fail(Errc::InvalidArgument, "task id must be in 1..6, got " + std::to_string(task_id));
  }
  spec.expected_boundaries = spec.structure.size() - 1;
  return spec;
}

std::size_t min_source_sentences(int task_id) {
  switch (task_id) {
    case 1:
    case 2: return 2;
    case 3:
    case 4: return 3;
    default: return 4;
  }
}

RemovalPlan plan_removal(std::size_t k, const FillTaskSpec& task, Rng& rng) {
  if (k < min_source_sentences(task.task_id)) {
    fail(Errc::SourceTooShort, "task " + std::to_string(task.task_id) + " needs at least " +
                                   std::to_string(min_source_sentences(task.task_id)) +
                                   " sentences, source has " + std::to_string(k));
  }
  RemovalPlan plan;
  plan.task_id = task.task_id;
  plan.source_size = k;
  switch (task.task_id) {
    case 1: {  // suffix removed
      const auto r = draw(rng, 1, k - 1);
      plan.kept_spans = {{1, k - r}};
      plan.removal_events = {r};
      plan.fill_sizes = {r};
      break;
    }
    case 2: {  // prefix removed
      const auto r = draw(rng, 1, k - 1);
      plan.kept_spans = {{r + 1, k}};
      plan.removal_events = {r};
      plan.fill_sizes = {r};
      break;
    }
    case 3: {  // interior block; both ends keep at least one sentence
      const auto r = draw(rng, 1, k - 2);
      const auto s = draw(rng, 2, k - r);
      plan.kept_spans = {{1, s - 1}, {s + r, k}};
      plan.removal_events = {r};
      plan.fill_sizes = {r};
      break;
    }
    case 4: {  // prefix and suffix; a middle block is kept
      const auto r = draw(rng, 2, k - 1);
      const auto head = draw(rng, 1, r - 1);
      plan.kept_spans = {{head + 1, k - (r - head)}};
      plan.removal_events = {r};
      plan.fill_sizes = {head, r - head};
      break;
    }
    case 5: {  // task-3 stage, then a suffix of H2 removed
      const auto r1 = draw(rng, 1, k - 3);
      const auto s = draw(rng, 2, k - r1 - 1);
      const SentenceSpan h1{1, s - 1};
      const SentenceSpan h2{s + r1, k};
      const auto r2 = draw(rng, 1, h2.size() - 1);
      plan.first_stage_spans = {h1, h2};
      plan.kept_spans = {h1, {h2.start, h2.end - r2}};
      plan.removal_events = {r1, r2};
      plan.fill_sizes = {r1, r2};
      break;
    }
    case 6: {  // task-3 stage, then a prefix of H1 removed
      const auto r1 = draw(rng, 1, k - 3);
      const auto s = draw(rng, 3, k - r1);
      const SentenceSpan h1{1, s - 1};
      const SentenceSpan h2{s + r1, k};
      const auto r2 = draw(rng, 1, h1.size() - 1);
      plan.first_stage_spans = {h1, h2};
      plan.kept_spans = {{h1.start + r2, h1.end}, h2};
      plan.removal_events = {r1, r2};
      plan.fill_sizes = {r2, r1};
      break;
    }
    default: fail(Errc::InvalidArgument, "unknown task");
  }
  plan.removed_count = 0;
  for (auto r : plan.removal_events) plan.removed_count += r;
  return plan;
}

Slot Slot::keep(AuthorLabel label, std::vector<std::string> sentences) {
  Slot s;
  s.label = label;
  s.fixed = true;
  s.sentences = std::move(sentences);
  return s;
}

Slot Slot::fill(std::size_t target_sentences) {
  Slot s;
  s.label = AuthorLabel::Generated;
  s.fixed = false;
  s.target_sentences = target_sentences;
  return s;
}

std::string Prompt::text() const {
  if (instructions.empty()) return directive;
  return instructions + "\n\n" + directive;
}

Prompt build_prompt(const FillTaskSpec& task, const std::string& instructions,
                    const std::vector<Slot>& slots) {
  // Collapse runs of fixed slots into one text; the directive only sees
  // the alternation of kept text and gaps.
  std::vector<std::string> kept;
  std::string shape;
  for (const auto& slot : slots) {
    if (slot.fixed) {
      if (!shape.empty() && shape.back() == 'K') {
        kept.back() += " " + join(slot.sentences);
      } else {
        kept.push_back(join(slot.sentences));
        shape.push_back('K');
      }
    } else {
      shape.push_back('F');
    }
  }
  Prompt prompt;
  prompt.instructions = instructions;
  const bool second_stage = task.task_id >= 5 && slots.size() == 4;
  if (shape == "KF") {
    prompt.directive = "Please begin with " + quoted(kept[0]);
  } else if (shape == "FK") {
    prompt.directive = second_stage ? "Please use " + quoted(kept[0]) + " as the ending."
                                    : "Please ensure to use " + quoted(kept[0]) + " as the ending.";
  } else if (shape == "KFK") {
    prompt.directive = "Please begin with " + quoted(kept[0]) +
                       " and continue writing the second part. For the ending, please use " +
                       quoted(kept[1]) + " as the ending.";
  } else if (shape == "FKF") {
    prompt.directive = "Please ensure to include " + quoted(kept[0]) +
                       " in between the starting text and the ending text.";
  } else {
    fail(Errc::InvalidArgument, "slot layout " + shape + " has no directive template");
  }
  return prompt;
}

std::string_view reason_code(ValidationReason reason) {
  switch (reason) {
    case ValidationReason::Ok: return "Ok";
    case ValidationReason::EmptyCandidate: return "EmptyCandidate";
    case ValidationReason::StructureMismatch: return "StructureMismatch";
    case ValidationReason::EmptySegment: return "EmptySegment";
    case ValidationReason::DuplicateSentence: return "DuplicateSentence";
  }
  return "Unknown";
}

namespace {

struct Matcher {
  const std::string& text;
  const std::vector<std::string>& fixed_text;  // per slot; empty for fills
  const std::vector<Slot>& slots;
  bool allow_empty_fill;
  std::vector<std::string> captures;  // per slot

  std::size_t skip_spaces(std::size_t pos) const {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    return pos;
  }

  bool ends_at_word(std::size_t pos) const { return pos == text.size() || text[pos] == ' '; }

  bool match(std::size_t idx, std::size_t pos) {
    pos = skip_spaces(pos);
    if (idx == slots.size()) return pos == text.size();
    if (slots[idx].fixed) {
      const auto& f = fixed_text[idx];
      if (text.compare(pos, f.size(), f) != 0 || !ends_at_word(pos + f.size())) return false;
      return match(idx + 1, pos + f.size());
    }
    if (idx + 1 == slots.size()) {
      captures[idx] = text.substr(pos);
      return allow_empty_fill || !captures[idx].empty();
    }
    // A fill is always followed by a fixed slot: try each occurrence.
    const auto& next = fixed_text[idx + 1];
    for (std::size_t q = text.find(next, pos); q != std::string::npos; q = text.find(next, q + 1)) {
      if (q > 0 && text[q - 1] != ' ') continue;
      std::string piece = normalize_whitespace(std::string_view(text).substr(pos, q - pos));
      if (piece.empty() && !allow_empty_fill) continue;
      captures[idx] = piece;
      if (match(idx + 1, q)) return true;
    }
    return false;
  }
};

}  // namespace

ValidationResult validate_generation(const std::string& candidate, const std::vector<Slot>& slots) {
  ValidationResult result;
  const auto text = normalize_whitespace(candidate);
  if (text.empty()) {
    result.reason = ValidationReason::EmptyCandidate;
    return result;
  }
  std::vector<std::string> fixed_text(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].fixed) fixed_text[i] = normalize_whitespace(join(slots[i].sentences));
  }
  Matcher strict{text, fixed_text, slots, false, std::vector<std::string>(slots.size())};
  if (!strict.match(0, 0)) {
    Matcher relaxed{text, fixed_text, slots, true, std::vector<std::string>(slots.size())};
    result.reason = relaxed.match(0, 0) ? ValidationReason::EmptySegment : ValidationReason::StructureMismatch;
    return result;
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].fixed) {
      for (const auto& s : slots[i].sentences) result.sentences.emplace_back(s, slots[i].label);
      continue;
    }
    auto generated = split_sentences(strict.captures[i]);
    if (generated.empty()) {
      result.reason = ValidationReason::EmptySegment;
      result.sentences.clear();
      return result;
    }
    for (auto& s : generated) result.sentences.emplace_back(std::move(s), AuthorLabel::Generated);
  }
  std::set<std::string> seen;
  for (const auto& [s, label] : result.sentences) {
    if (!seen.insert(fold(s)).second) {
      result.reason = ValidationReason::DuplicateSentence;
      result.sentences.clear();
      return result;
    }
  }
  return result;
}

std::string hybrid_doc_id(const RawEssay& source, int task_id) {
  return source.source_id + "-t" + std::to_string(task_id);
}

namespace {

std::vector<std::string> take(const std::vector<std::string>& sentences, SentenceSpan span) {
  return {sentences.begin() + static_cast<std::ptrdiff_t>(span.start - 1),
          sentences.begin() + static_cast<std::ptrdiff_t>(span.end)};
}

std::vector<std::string> texts_with_label(const ValidationResult& r, AuthorLabel label) {
  std::vector<std::string> out;
  for (const auto& [s, l] : r.sentences) {
    if (l == label) out.push_back(s);
  }
  return out;
}

ValidationResult run_stage(const FillTaskSpec& task, const RawEssay& source, std::vector<Slot> slots,
                           SentenceGenerator& generator) {
  GenerationRequest request;
  const auto prompt = build_prompt(task, source.instructions, slots);
  request.instructions = prompt.instructions;
  request.directive = prompt.directive;
  request.slots = std::move(slots);
  const auto candidate = generator.generate(request);
  return validate_generation(candidate, request.slots);
}

}  // namespace

SynthesisOutcome synthesize_hybrid(const RawEssay& source, const FillTaskSpec& task,
                                   SentenceGenerator& generator, Rng& rng, std::size_t max_attempts) {
  const auto sentences = split_sentences(source.text);
  SynthesisOutcome outcome;
  for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
    outcome.attempts_used = attempt;
    const auto plan = plan_removal(sentences.size(), task, rng);
    std::vector<Slot> slots;
    switch (task.task_id) {
      case 1: slots = {Slot::keep(H, take(sentences, plan.kept_spans[0])), Slot::fill(plan.fill_sizes[0])}; break;
      case 2: slots = {Slot::fill(plan.fill_sizes[0]), Slot::keep(H, take(sentences, plan.kept_spans[0]))}; break;
      case 3:
        slots = {Slot::keep(H, take(sentences, plan.kept_spans[0])), Slot::fill(plan.fill_sizes[0]),
                 Slot::keep(H, take(sentences, plan.kept_spans[1]))};
        break;
      case 4:
        slots = {Slot::fill(plan.fill_sizes[0]), Slot::keep(H, take(sentences, plan.kept_spans[0])),
                 Slot::fill(plan.fill_sizes[1])};
        break;
      default: break;
    }
    ValidationResult result;
    if (task.task_id <= 4) {
      result = run_stage(task, source, std::move(slots), generator);
    } else {
      const auto& stage = plan.first_stage_spans;
      const auto middle_fill = task.task_id == 5 ? plan.fill_sizes[0] : plan.fill_sizes[1];
      auto first = run_stage(task, source,
                             {Slot::keep(H, take(sentences, stage[0])), Slot::fill(middle_fill),
                              Slot::keep(H, take(sentences, stage[1]))},
                             generator);
      if (!first.valid()) {
        outcome.failures.push_back(first.reason);
        continue;
      }
      auto middle = texts_with_label(first, G);
      if (task.task_id == 5) {
        slots = {Slot::keep(H, take(sentences, plan.kept_spans[0])), Slot::keep(G, std::move(middle)),
                 Slot::keep(H, take(sentences, plan.kept_spans[1])), Slot::fill(plan.fill_sizes[1])};
      } else {
        slots = {Slot::fill(plan.fill_sizes[0]), Slot::keep(H, take(sentences, plan.kept_spans[0])),
                 Slot::keep(G, std::move(middle)), Slot::keep(H, take(sentences, plan.kept_spans[1]))};
      }
      result = run_stage(task, source, std::move(slots), generator);
    }
    if (!result.valid()) {
      outcome.failures.push_back(result.reason);
      continue;
    }
    std::vector<std::pair<std::string, std::optional<AuthorLabel>>> labeled;
    labeled.reserve(result.sentences.size());
    for (auto& [s, l] : result.sentences) labeled.emplace_back(std::move(s), l);
    auto doc = make_document(hybrid_doc_id(source, task.task_id), source.prompt_id, source.source_id,
                             labeled, task.task_id);
    if (ground_truth_boundaries(doc).size() != task.expected_boundaries) {
      outcome.failures.push_back(ValidationReason::StructureMismatch);
      continue;
    }
    outcome.document = std::move(doc);
    return outcome;
  }
  return outcome;
}

CorpusSynthesis synthesize_corpus(const std::vector<RawEssay>& sources, const std::vector<int>& task_ids,
                                  SentenceGenerator& generator, std::uint64_t seed, std::size_t max_attempts) {
  if (task_ids.empty()) fail(Errc::InvalidArgument, "no synthesis tasks given");
  std::vector<FillTaskSpec> specs;
  for (int id : task_ids) specs.push_back(fill_task(id));

  CorpusSynthesis out;
  const auto kept = filter_source_essays(sources);
  out.filtered_out = sources.size() - kept.size();

  std::vector<SynthesisOutcome> outcomes(kept.size());
  std::vector<std::string> too_short(kept.size());
  auto one = [&](std::size_t i) {
    const auto& spec = specs[i % specs.size()];
    Rng rng(derive_seed(seed, "synth/" + kept[i].source_id + "/" + std::to_string(spec.task_id)));
    try {
      outcomes[i] = synthesize_hybrid(kept[i], spec, generator, rng, max_attempts);
    } catch (const Error& e) {
      if (e.code() != Errc::SourceTooShort) throw;
      too_short[i] = e.what();
    }
  };
  if (generator.concurrent_safe()) {
    parallel_for(kept.size(), one);
  } else {
    for (std::size_t i = 0; i < kept.size(); ++i) one(i);
  }

  for (std::size_t i = 0; i < kept.size(); ++i) {
    SynthesisLogEntry entry{kept[i].source_id, specs[i % specs.size()].task_id, false, 0, {}};
    if (!too_short[i].empty()) {
      entry.reasons.push_back("source_too_short");
    } else {
      entry.attempts = outcomes[i].attempts_used;
      for (auto r : outcomes[i].failures) entry.reasons.emplace_back(reason_code(r));
      if (outcomes[i].document) {
        entry.accepted = true;
        out.documents.push_back(std::move(*outcomes[i].document));
      }
    }
    out.log.push_back(std::move(entry));
  }
  return out;
}

}  // namespace seamline
