#include <doctest.h>

#include <cmath>
#include <fstream>

#include "seamline/error.hpp"
#include "seamline/experiment.hpp"
#include "seamline/scoring.hpp"
#include "support.hpp"

using namespace seamline;
using seamline::testing::doc_from_labels;
using seamline::testing::TempDir;

namespace {

// Emits the true boundary plus two wrong positions: F1 = 2 / (3 + 1).
class HalfOracle final : public Method {
 public:
  std::vector<std::string> variant_ids() const override { return {"half-oracle"}; }
  std::vector<BoundaryPrediction> predict(const HybridDocument& doc, std::uint64_t) const override {
    const auto truth = ground_truth_boundaries(doc);
    BoundaryPrediction p;
    p.method_id = "half-oracle";
    p.candidates.push_back({truth.front(), 3.0});
    double score = 2.0;
    for (std::size_t i = 1; i < doc.size() && p.candidates.size() < 3; ++i) {
      if (i != truth.front()) p.candidates.push_back({i, score--});
    }
    return {p};
  }
};

class Failing final : public Method {
 public:
  std::vector<std::string> variant_ids() const override { return {"broken(a)", "broken(b)"}; }
  void fit(const std::vector<HybridDocument>&, const std::vector<HybridDocument>&, std::uint64_t) override {
    fail(Errc::SingleClassCorpus, "nothing to learn");
  }
  std::vector<BoundaryPrediction> predict(const HybridDocument&, std::uint64_t) const override { return {}; }
};

// Counts fits and records the seeds it was given.
class Recorder final : public Method {
 public:
  std::vector<std::string> variant_ids() const override { return {"recorder"}; }
  void fit(const std::vector<HybridDocument>& train, const std::vector<HybridDocument>&, std::uint64_t seed) override {
    seeds.push_back(seed);
    train_sizes.push_back(train.size());
  }
  std::vector<BoundaryPrediction> predict(const HybridDocument&, std::uint64_t) const override {
    BoundaryPrediction p;
    p.candidates.push_back({1, 1.0});
    return {p};
  }
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> train_sizes;
};

std::vector<HybridDocument> single_boundary_corpus(int n_docs) {
  std::vector<HybridDocument> docs;
  for (int d = 0; d < n_docs; ++d) {
    const std::string id = "d" + std::to_string(100 + d);
    docs.push_back(doc_from_labels(std::string(3 + d % 4, 'H') + std::string(4 + d % 3, 'G'), id, d % 4 + 1, id));
  }
  return docs;
}

}  // namespace

TEST_CASE("half oracle scores exactly one half") {
  const auto docs = single_boundary_corpus(40);
  const auto split = make_id_split(docs, {0.70, 0.15, 0.15}, 1);
  HalfOracle oracle;
  const auto report = run_experiment(docs, {&oracle}, {split}, ExperimentOptions{});
  REQUIRE(report.methods.size() == 1);
  const auto& m = report.methods[0];
  CHECK(m.method_id == "half-oracle");
  CHECK(m.runs.size() == 3);
  CHECK(m.overall == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m.breakdown.at("1") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m.breakdown.count("2") == 0);
  CHECK(report.runs == 3);
  CHECK(report.schema == "seamline-report/1");
}

TEST_CASE("overall and breakdown are recomputable from per-document scores") {
  std::vector<HybridDocument> docs;
  const std::vector<std::string> layouts = {"HHGG", "HGHG", "HHGHH", "HGGHHG", "GGHHGHG", "HHHHGG"};
  for (int d = 0; d < 60; ++d) {
    const std::string id = "m" + std::to_string(d);
    docs.push_back(doc_from_labels(layouts[d % layouts.size()], id, 1 + d % 3, "src" + std::to_string(d / 2)));
  }
  const auto split = make_id_split(docs, {0.5, 0.25, 0.25}, 3);
  RandomMethod random;
  ExperimentOptions options;
  options.runs = 4;
  options.seed = 10;
  const auto report = run_experiment(docs, {&random}, {split}, options);
  const auto& m = report.methods.at(0);
  REQUIRE(m.runs.size() == 4);
  double mean_of_runs = 0.0;
  for (std::size_t r = 0; r < 4; ++r) {
    const auto& run = m.runs[r];
    CHECK(run.run == r);
    CHECK(run.seed == 10 + r);
    double sum = 0.0;
    std::map<std::string, std::pair<double, int>> buckets;
    for (const auto& d : run.docs) {
      sum += d.f1;
      const std::string key = d.boundaries <= 3 ? std::to_string(d.boundaries) : "other";
      buckets[key].first += d.f1;
      ++buckets[key].second;
      const auto& doc = *std::find_if(docs.begin(), docs.end(), [&](const auto& x) { return x.doc_id == d.doc_id; });
      CHECK(d.f1 == doctest::Approx(f1_at_k(d.predicted, ground_truth_boundaries(doc))).epsilon(1e-12));
    }
    CHECK(std::abs(run.overall - sum / run.docs.size()) < 1e-12);
    for (const auto& [key, acc] : buckets) CHECK(std::abs(run.breakdown.at(key) - acc.first / acc.second) < 1e-12);
    for (std::size_t i = 1; i < run.docs.size(); ++i) CHECK(run.docs[i - 1].doc_id < run.docs[i].doc_id);
    mean_of_runs += run.overall / 4.0;
  }
  CHECK(std::abs(m.overall - mean_of_runs) < 1e-12);
  CHECK(m.runs[0].docs != m.runs[1].docs);

  SUBCASE("reruns are identical") {
    CHECK(run_experiment(docs, {&random}, {split}, options) == report);
  }
}

TEST_CASE("method failures are captured per method") {
  const auto docs = single_boundary_corpus(30);
  const auto split = make_id_split(docs, {0.70, 0.15, 0.15}, 2);
  Failing broken;
  HalfOracle oracle;
  const auto report = run_experiment(docs, {&broken, &oracle}, {split}, ExperimentOptions{});
  REQUIRE(report.methods.size() == 3);
  CHECK(report.methods[0].method_id == "broken(a)");
  CHECK(report.methods[1].method_id == "broken(b)");
  for (int i = 0; i < 2; ++i) {
    REQUIRE(report.methods[i].error.has_value());
    CHECK(report.methods[i].error->find("nothing to learn") != std::string::npos);
  }
  CHECK_FALSE(report.methods[2].error.has_value());
  CHECK(report.methods[2].overall == doctest::Approx(0.5));
}

TEST_CASE("fit is called once per run and fold") {
  std::vector<HybridDocument> docs;
  for (int p = 1; p <= 3; ++p)
    for (int s = 0; s < 5; ++s) {
      const std::string id = "p" + std::to_string(p) + "s" + std::to_string(s);
      docs.push_back(doc_from_labels("HHGG", id, p, id));
    }
  const auto folds = make_ood_folds(docs, 0);
  Recorder rec;
  ExperimentOptions options;
  options.runs = 2;
  options.seed = 7;
  const auto report = run_experiment(docs, {&rec}, folds, options);
  CHECK(rec.seeds.size() == 6);
  CHECK(rec.seeds[0] == 7);
  CHECK(rec.seeds[3] == 8);
  for (auto n : rec.train_sizes) CHECK(n == 7);  // 10 other-prompt groups, 3 to val
  const auto& run = report.methods[0].runs[0];
  CHECK(run.docs.size() == 15);
  for (const auto& d : run.docs) {
    REQUIRE(d.fold.has_value());
    CHECK(d.doc_id.substr(0, 2) == "p" + std::to_string(*d.fold));
  }
}

TEST_CASE("documents without a boundary are skipped and counted") {
  auto docs = single_boundary_corpus(20);
  for (int i = 0; i < 20; ++i) {
    const std::string id = "z" + std::to_string(i);
    docs.push_back(doc_from_labels("HHHH", id, 1, id));
  }
  const auto split = make_id_split(docs, {0.5, 0.25, 0.25}, 0);
  HalfOracle oracle;
  const auto report = run_experiment(docs, {&oracle}, {split}, ExperimentOptions{});
  std::size_t zero_in_test = 0;
  for (const auto& d : split.select(docs, Partition::Test)) zero_in_test += ground_truth_boundaries(d).empty();
  CHECK(zero_in_test > 0);
  CHECK(report.unscored_docs == zero_in_test);
  CHECK(report.methods[0].overall == doctest::Approx(0.5));
}

TEST_CASE("random method ids and determinism") {
  RandomMethod r;
  CHECK(r.variant_ids() == std::vector<std::string>{"random(K=3)"});
  const auto doc = doc_from_labels("HHHHHGGGGG", "rd");
  CHECK(r.predict(doc, 1)[0].positions() == r.predict(doc, 1)[0].positions());
  bool differs = false;
  for (std::uint64_t s = 2; s < 12; ++s) differs |= r.predict(doc, s)[0].positions() != r.predict(doc, 1)[0].positions();
  CHECK(differs);
}

TEST_CASE("tribert and logistic methods on separable vectors") {
  Rng rng(6);
  std::vector<std::string> layouts;
  for (int d = 0; d < 60; ++d) layouts.push_back(seamline::testing::single_boundary_layout(4 + d % 4, 4 + d % 5, d % 2));
  auto corpus = seamline::testing::vector_corpus(layouts, 8, seamline::testing::gaussian_clusters(8, 4.0, 0.5, rng), rng, "x");
  std::shared_ptr<const EmbeddingProvider> provider = corpus.provider;
  const auto split = make_id_split(corpus.docs, {0.70, 0.15, 0.15}, 1);

  auto nt = TriBertMethod::untrained(provider, {1, 2, 3}, 3);
  CHECK(nt->variant_ids() == std::vector<std::string>{"tribert-nt(p=1,K=3)", "tribert-nt(p=2,K=3)", "tribert-nt(p=3,K=3)"});
  LogisticMethod lr(provider, 3);
  LogisticMethod lr_all(provider, std::nullopt);
  CHECK(lr.variant_ids() == std::vector<std::string>{"lr(K=3)"});
  CHECK(lr_all.variant_ids() == std::vector<std::string>{"lr(all)"});
  TrainConfig config;
  config.max_epochs = 3;
  config.lr_grid = {1e-3};
  auto trained = TriBertMethod::trained(provider, config, {2}, 3);

  ExperimentOptions options;
  options.runs = 1;
  const auto report = run_experiment(corpus.docs, {nt.get(), &lr, &lr_all, trained.get()}, {split}, options);
  REQUIRE(report.methods.size() == 6);
  for (const auto& m : report.methods) CHECK_FALSE(m.error.has_value());
  CHECK(report.methods[0].overall >= 0.45);  // well separated clusters: true boundary in every top-3
  CHECK(report.methods[4].overall > 0.95);   // lr(all): exact transitions
  CHECK(trained->last_history().has_value());
  CHECK(trained->head().has_value());
}

TEST_CASE("external label files") {
  TempDir dir;
  {
    std::ofstream out(dir / "labels.jsonl");
    out << R"({"doc_id":"a","labels":["H","H","G","G"],"confidence":[0.9,0.8,0.7,0.9]})" << "\n";
    out << R"({"doc_id":"b","labels":["H","G","H","G"]})" << "\n";
  }
  const auto labels = load_label_sequences(dir / "labels.jsonl");
  REQUIRE(labels.size() == 2);
  CHECK(labels.at("b").confidence == std::vector<double>(4, 1.0));

  ExternalLabelsMethod m("gptzero", labels, std::nullopt);
  CHECK(m.variant_ids() == std::vector<std::string>{"gptzero(all)"});
  CHECK(m.predict(doc_from_labels("HHGG", "a"), 0)[0].positions() == std::vector<std::size_t>{2});
  CHECK(m.predict(doc_from_labels("HGHG", "b"), 0)[0].positions().size() == 3);
  CHECK_THROWS_AS(m.predict(doc_from_labels("HGHG", "missing"), 0), Error);
  CHECK_THROWS_AS(m.predict(doc_from_labels("HGH", "a"), 0), Error);
  CHECK(ExternalLabelsMethod("x", labels, 1).variant_ids() == std::vector<std::string>{"x(K=1)"});

  {
    std::ofstream out(dir / "bad.jsonl");
    out << R"({"doc_id":"a","labels":["H","Q"]})" << "\n";
  }
  CHECK_THROWS_AS(load_label_sequences(dir / "bad.jsonl"), Error);
}
