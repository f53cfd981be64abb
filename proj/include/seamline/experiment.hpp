#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "seamline/baselines.hpp"
#include "seamline/corpus.hpp"
#include "seamline/detector.hpp"
#include "seamline/embeddings.hpp"
#include "seamline/metric.hpp"
#include "seamline/splits.hpp"

namespace seamline {

/// A boundary detection method under evaluation. A method may expose
/// several variants (e.g. one per prototype size) that share one fit.
class Method {
 public:
  virtual ~Method() = default;
  virtual std::vector<std::string> variant_ids() const = 0;
  /// Called once per (run, fold) before any predict.
  virtual void fit(const std::vector<HybridDocument>& train, const std::vector<HybridDocument>& val,
                   std::uint64_t seed) {
    (void)train;
    (void)val;
    (void)seed;
  }
  /// One prediction per variant. Must be safe to call concurrently.
  virtual std::vector<BoundaryPrediction> predict(const HybridDocument& doc, std::uint64_t seed) const = 0;
};

class RandomMethod final : public Method {
 public:
  explicit RandomMethod(std::size_t k = kDefaultK) : k_(k) {}
  std::vector<std::string> variant_ids() const override;
  std::vector<BoundaryPrediction> predict(const HybridDocument& doc, std::uint64_t seed) const override;

 private:
  std::size_t k_;
};

/// Prototype-distance detector. Untrained (base embeddings only), with a
/// fixed head, or training a head on every fit.
class TriBertMethod final : public Method {
 public:
  enum class Mode { Untrained, FixedHead, Train };

  static std::unique_ptr<TriBertMethod> untrained(std::shared_ptr<const EmbeddingProvider> provider,
                                                  std::vector<std::size_t> p_values, std::size_t k);
  static std::unique_ptr<TriBertMethod> with_head(std::shared_ptr<const EmbeddingProvider> provider,
                                                  ProjectionHead head, std::vector<std::size_t> p_values,
                                                  std::size_t k);
  static std::unique_ptr<TriBertMethod> trained(std::shared_ptr<const EmbeddingProvider> provider,
                                                TrainConfig config, std::vector<std::size_t> p_values,
                                                std::size_t k);

  std::vector<std::string> variant_ids() const override;
  void fit(const std::vector<HybridDocument>& train, const std::vector<HybridDocument>& val,
           std::uint64_t seed) override;
  std::vector<BoundaryPrediction> predict(const HybridDocument& doc, std::uint64_t seed) const override;

  const std::optional<ProjectionHead>& head() const { return head_; }
  const std::optional<TrainHistory>& last_history() const { return history_; }

 private:
  TriBertMethod(Mode mode, std::shared_ptr<const EmbeddingProvider> provider, std::vector<std::size_t> p_values,
                std::size_t k);

  Mode mode_;
  std::shared_ptr<const EmbeddingProvider> provider_;
  std::vector<std::size_t> p_values_;
  std::size_t k_;
  TrainConfig config_;
  std::optional<ProjectionHead> head_;
  std::optional<TrainHistory> history_;
};

/// Logistic regression on base embeddings; boundaries from label changes.
class LogisticMethod final : public Method {
 public:
  LogisticMethod(std::shared_ptr<const EmbeddingProvider> provider, std::optional<std::size_t> k,
                 LogisticConfig config = {});
  /// Uses a pre-trained model instead of fitting.
  LogisticMethod(std::shared_ptr<const EmbeddingProvider> provider, std::optional<std::size_t> k,
                 LogisticModel model);

  std::vector<std::string> variant_ids() const override;
  void fit(const std::vector<HybridDocument>& train, const std::vector<HybridDocument>& val,
           std::uint64_t seed) override;
  std::vector<BoundaryPrediction> predict(const HybridDocument& doc, std::uint64_t seed) const override;

 private:
  std::shared_ptr<const EmbeddingProvider> provider_;
  std::optional<std::size_t> k_;
  LogisticConfig config_;
  bool fixed_ = false;
  std::optional<LogisticModel> model_;
};

/// Per-sentence labels produced by any outside classifier, converted to
/// boundaries by label transitions.
class ExternalLabelsMethod final : public Method {
 public:
  ExternalLabelsMethod(std::string name, std::map<std::string, LabelSequence> labels,
                       std::optional<std::size_t> k);
  std::vector<std::string> variant_ids() const override;
  std::vector<BoundaryPrediction> predict(const HybridDocument& doc, std::uint64_t seed) const override;

 private:
  std::string name_;
  std::map<std::string, LabelSequence> labels_;
  std::optional<std::size_t> k_;
};

/// JSON lines {"doc_id", "labels": ["H"|"G", ...], "confidence": [...]?}.
std::map<std::string, LabelSequence> load_label_sequences(const std::filesystem::path& path);

struct DocScore {
  std::string doc_id;
  std::size_t boundaries = 0;
  double f1 = 0.0;
  std::vector<std::size_t> predicted;
  std::optional<int> fold;
  friend bool operator==(const DocScore&, const DocScore&) = default;
};

struct RunScores {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  double overall = 0.0;
  std::map<std::string, double> breakdown;  // "1", "2", "3", "other"
  std::vector<DocScore> docs;               // sorted by doc_id
  friend bool operator==(const RunScores&, const RunScores&) = default;
};

struct MethodReport {
  std::string method_id;
  std::vector<RunScores> runs;
  double overall = 0.0;                     // mean over runs
  std::map<std::string, double> breakdown;  // mean over runs
  std::optional<std::string> error;
  friend bool operator==(const MethodReport&, const MethodReport&) = default;
};

inline constexpr std::string_view kReportSchema = "seamline-report/1";

struct EvalReport {
  std::string schema{kReportSchema};
  std::size_t runs = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<MethodReport> methods;
  std::size_t unscored_docs = 0;  // test documents without a boundary
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct ExperimentOptions {
  std::size_t runs = 3;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
};

/// Fits and scores every method on every split for `runs` runs (run r uses
/// seed + r). Test documents of all splits are pooled, so out-of-domain
/// folds are weighted by test size. A failing method is recorded and the
/// others continue.
EvalReport run_experiment(const std::vector<HybridDocument>& docs, const std::vector<Method*>& methods,
                          const std::vector<SplitSpec>& splits, const ExperimentOptions& options);

/// Aggregates per-document scores: overall mean and per-bucket means.
void summarize_run(RunScores& run);

}  // namespace seamline
