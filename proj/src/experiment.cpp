#include "seamline/experiment.hpp"

#include <algorithm>
#include <fstream>

#include "seamline/corpus_io.hpp"
#include "seamline/error.hpp"
#include "seamline/parallel.hpp"
#include "seamline/scoring.hpp"

namespace seamline {

using nlohmann::json;

std::vector<std::string> RandomMethod::variant_ids() const { return {"random(K=" + std::to_string(k_) + ")"}; }

std::vector<BoundaryPrediction> RandomMethod::predict(const HybridDocument& doc, std::uint64_t seed) const {
  Rng rng(derive_seed(seed, "random/" + doc.doc_id));
  auto pred = random_boundaries(doc.size(), k_, rng);
  pred.method_id = variant_ids().front();
  return {std::move(pred)};
}

TriBertMethod::TriBertMethod(Mode mode, std::shared_ptr<const EmbeddingProvider> provider,
                             std::vector<std::size_t> p_values, std::size_t k)
    : mode_(mode), provider_(std::move(provider)), p_values_(std::move(p_values)), k_(k) {
  if (p_values_.empty()) fail(Errc::InvalidArgument, "at least one prototype size is required");
}

std::unique_ptr<TriBertMethod> TriBertMethod::untrained(std::shared_ptr<const EmbeddingProvider> provider,
                                                        std::vector<std::size_t> p_values, std::size_t k) {
  return std::unique_ptr<TriBertMethod>(new TriBertMethod(Mode::Untrained, std::move(provider), std::move(p_values), k));
}

std::unique_ptr<TriBertMethod> TriBertMethod::with_head(std::shared_ptr<const EmbeddingProvider> provider,
                                                        ProjectionHead head, std::vector<std::size_t> p_values,
                                                        std::size_t k) {
  auto m = std::unique_ptr<TriBertMethod>(new TriBertMethod(Mode::FixedHead, std::move(provider), std::move(p_values), k));
  m->head_ = std::move(head);
  return m;
}

std::unique_ptr<TriBertMethod> TriBertMethod::trained(std::shared_ptr<const EmbeddingProvider> provider,
                                                      TrainConfig config, std::vector<std::size_t> p_values,
                                                      std::size_t k) {
  auto m = std::unique_ptr<TriBertMethod>(new TriBertMethod(Mode::Train, std::move(provider), std::move(p_values), k));
  m->config_ = std::move(config);
  return m;
}

std::vector<std::string> TriBertMethod::variant_ids() const {
  std::vector<std::string> ids;
  for (auto p : p_values_) ids.push_back(tribert_method_id({p, k_}, mode_ != Mode::Untrained));
  return ids;
}

void TriBertMethod::fit(const std::vector<HybridDocument>& train, const std::vector<HybridDocument>& val,
                        std::uint64_t seed) {
  if (mode_ != Mode::Train) return;
  auto config = config_;
  config.seed = derive_seed(config_.seed ^ seed, "tribert-train");
  auto result = train_projection(train, val, *provider_, config);
  head_ = std::move(result.head);
  history_ = std::move(result.history);
}

std::vector<BoundaryPrediction> TriBertMethod::predict(const HybridDocument& doc, std::uint64_t) const {
  if (mode_ != Mode::Untrained && !head_) fail(Errc::InvalidArgument, "TriBERT method used before fit");
  const auto emb = provider_->embed(doc.texts()).vectors;
  const Matrix projected = head_ ? project(*head_, emb) : emb;
  std::vector<BoundaryPrediction> out;
  for (auto p : p_values_) {
    PrototypeParams params{p, k_};
    auto pred = top_k_boundaries(distance_profile(projected, p), k_);
    pred.method_id = tribert_method_id(params, mode_ != Mode::Untrained);
    out.push_back(std::move(pred));
  }
  return out;
}

LogisticMethod::LogisticMethod(std::shared_ptr<const EmbeddingProvider> provider, std::optional<std::size_t> k,
                               LogisticConfig config)
    : provider_(std::move(provider)), k_(k), config_(config) {}

LogisticMethod::LogisticMethod(std::shared_ptr<const EmbeddingProvider> provider, std::optional<std::size_t> k,
                               LogisticModel model)
    : provider_(std::move(provider)), k_(k), fixed_(true), model_(std::move(model)) {}

std::vector<std::string> LogisticMethod::variant_ids() const {
  return {k_ ? "lr(K=" + std::to_string(*k_) + ")" : "lr(all)"};
}

namespace {

struct LabeledRows {
  Matrix x;
  std::vector<AuthorLabel> y;
};

LabeledRows labeled_rows(const std::vector<HybridDocument>& docs, const EmbeddingProvider& provider) {
  LabeledRows out;
  for (const auto& doc : docs) {
    if (!doc.fully_labeled()) fail(Errc::UnlabeledSentence, "document " + doc.doc_id + " is not fully labeled");
    const auto emb = provider.embed(doc.texts()).vectors;
    for (std::size_t i = 0; i < doc.size(); ++i) {
      out.x.append_row(emb.row(i));
      out.y.push_back(*doc.sentences[i].label);
    }
  }
  return out;
}

}  // namespace

void LogisticMethod::fit(const std::vector<HybridDocument>& train, const std::vector<HybridDocument>& val,
                         std::uint64_t seed) {
  if (fixed_) return;
  const auto tr = labeled_rows(train, *provider_);
  auto config = config_;
  config.seed = seed;
  if (!val.empty()) {
    const auto va = labeled_rows(val, *provider_);
    model_ = train_logistic(tr.x, tr.y, config, &va.x, va.y).model;
  } else {
    model_ = train_logistic(tr.x, tr.y, config).model;
  }
}

std::vector<BoundaryPrediction> LogisticMethod::predict(const HybridDocument& doc, std::uint64_t) const {
  if (!model_) fail(Errc::InvalidArgument, "logistic method used before fit");
  const auto emb = provider_->embed(doc.texts()).vectors;
  auto pred = transitions_to_boundaries(classify_sentences(*model_, emb), k_);
  pred.method_id = variant_ids().front();
  return {std::move(pred)};
}

ExternalLabelsMethod::ExternalLabelsMethod(std::string name, std::map<std::string, LabelSequence> labels,
                                           std::optional<std::size_t> k)
    : name_(std::move(name)), labels_(std::move(labels)), k_(k) {}

std::vector<std::string> ExternalLabelsMethod::variant_ids() const {
  return {name_ + (k_ ? "(K=" + std::to_string(*k_) + ")" : "(all)")};
}

std::vector<BoundaryPrediction> ExternalLabelsMethod::predict(const HybridDocument& doc, std::uint64_t) const {
  auto it = labels_.find(doc.doc_id);
  if (it == labels_.end()) fail(Errc::Schema, "no external labels for document " + doc.doc_id);
  if (it->second.size() != doc.size()) {
    fail(Errc::Schema, "external labels for " + doc.doc_id + " have length " + std::to_string(it->second.size()) +
                           ", document has " + std::to_string(doc.size()));
  }
  auto pred = transitions_to_boundaries(it->second, k_);
  pred.method_id = variant_ids().front();
  return {std::move(pred)};
}

std::map<std::string, LabelSequence> load_label_sequences(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open label file " + path.string());
  std::map<std::string, LabelSequence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = json::parse(line);
      LabelSequence seq;
      for (const auto& l : obj.at("labels")) {
        auto label = parse_label(l.get<std::string>());
        if (!label) fail(Errc::Schema, "line " + std::to_string(line_no) + ": label must be H or G");
        seq.labels.push_back(*label);
      }
      if (obj.contains("confidence")) {
        seq.confidence = obj["confidence"].get<std::vector<double>>();
      } else {
        seq.confidence.assign(seq.labels.size(), 1.0);
      }
      if (seq.confidence.size() != seq.labels.size()) {
        fail(Errc::Schema, "line " + std::to_string(line_no) + ": confidence length differs from labels");
      }
      out[obj.at("doc_id").get<std::string>()] = std::move(seq);
    } catch (const json::parse_error& e) {
      fail(Errc::Parse, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      fail(Errc::Schema, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void summarize_run(RunScores& run) {
  std::sort(run.docs.begin(), run.docs.end(), [](const DocScore& a, const DocScore& b) {
    return a.doc_id != b.doc_id ? a.doc_id < b.doc_id : a.fold < b.fold;
  });
  double sum = 0.0;
  std::map<std::string, std::pair<double, std::size_t>> cells;
  for (const auto& d : run.docs) {
    sum += d.f1;
    auto& cell = cells[boundary_bucket(d.boundaries)];
    cell.first += d.f1;
    ++cell.second;
  }
  run.overall = run.docs.empty() ? 0.0 : sum / static_cast<double>(run.docs.size());
  run.breakdown.clear();
  for (const auto& [key, cell] : cells) run.breakdown[key] = cell.first / static_cast<double>(cell.second);
}

namespace {

void finish_method(MethodReport& m) {
  if (m.runs.empty()) return;
  double overall = 0.0;
  std::map<std::string, std::pair<double, std::size_t>> cells;
  for (const auto& r : m.runs) {
    overall += r.overall;
    for (const auto& [key, v] : r.breakdown) {
      cells[key].first += v;
      ++cells[key].second;
    }
  }
  m.overall = overall / static_cast<double>(m.runs.size());
  for (const auto& [key, c] : cells) m.breakdown[key] = c.first / static_cast<double>(c.second);
}

}  // namespace

EvalReport run_experiment(const std::vector<HybridDocument>& docs, const std::vector<Method*>& methods,
                          const std::vector<SplitSpec>& splits, const ExperimentOptions& options) {
  if (splits.empty()) fail(Errc::InvalidArgument, "an experiment needs at least one split");
  EvalReport report;
  report.runs = options.runs;
  report.config = options.config;

  // Truth per test document, computed once.
  std::vector<std::vector<HybridDocument>> tests;
  for (const auto& split : splits) tests.push_back(split.select(docs, Partition::Test));
  for (const auto& test : tests) {
    for (const auto& doc : test) {
      if (ground_truth_boundaries(doc).empty()) ++report.unscored_docs;
    }
  }

  for (Method* method : methods) {
    const auto ids = method->variant_ids();
    std::vector<MethodReport> rows(ids.size());
    for (std::size_t v = 0; v < ids.size(); ++v) rows[v].method_id = ids[v];
    try {
      for (std::size_t run = 0; run < options.runs; ++run) {
        const std::uint64_t run_seed = options.seed + run;
        std::vector<RunScores> per_variant(ids.size());
        for (auto& r : per_variant) {
          r.run = run;
          r.seed = run_seed;
        }
        for (std::size_t s = 0; s < splits.size(); ++s) {
          const auto& split = splits[s];
          method->fit(split.select(docs, Partition::Train), split.select(docs, Partition::Val), run_seed);
          const auto& test = tests[s];
          std::vector<std::vector<DocScore>> scores(test.size());
          parallel_for(test.size(), [&](std::size_t i) {
            const auto& doc = test[i];
            const auto truth = ground_truth_boundaries(doc);
            if (truth.empty()) return;
            const auto preds = method->predict(doc, run_seed);
            if (preds.size() != ids.size()) fail(Errc::InvalidArgument, "method returned the wrong variant count");
            for (const auto& pred : preds) {
              scores[i].push_back({doc.doc_id, truth.size(), f1_at_k(pred, truth), pred.positions(), split.fold_id});
            }
          });
          for (auto& doc_scores : scores) {
            for (std::size_t v = 0; v < doc_scores.size(); ++v) per_variant[v].docs.push_back(std::move(doc_scores[v]));
          }
        }
        for (std::size_t v = 0; v < ids.size(); ++v) {
          summarize_run(per_variant[v]);
          rows[v].runs.push_back(std::move(per_variant[v]));
        }
      }
      for (auto& row : rows) finish_method(row);
    } catch (const std::exception& e) {
      for (auto& row : rows) {
        row.runs.clear();
        row.breakdown.clear();
        row.overall = 0.0;
        row.error = e.what();
      }
    }
    for (auto& row : rows) report.methods.push_back(std::move(row));
  }
  return report;
}

}  // namespace seamline
