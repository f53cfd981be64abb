#include "seamline/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "seamline/corpus_io.hpp"
#include "seamline/error.hpp"

namespace seamline {

using nlohmann::json;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double LogisticModel::logit(std::span<const double> x) const {
  double z = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * x[j];
  return z;
}

namespace {

double target(AuthorLabel l) { return l == AuthorLabel::Generated ? 1.0 : 0.0; }

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_dims(const LogisticModel& model, const Matrix& x) {
  if (x.cols() != model.weights.size()) {
    fail(Errc::DimensionMismatch, "model expects dim " + std::to_string(model.weights.size()) + ", got " +
                                      std::to_string(x.cols()));
  }
}

}  // namespace

double logistic_loss(const LogisticModel& model, const Matrix& x, std::span<const AuthorLabel> y) {
  check_dims(model, x);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double z = model.logit(x.row(i));
    sum += softplus(z) - target(y[i]) * z;
  }
  return x.rows() ? sum / static_cast<double>(x.rows()) : 0.0;
}

double logistic_accuracy(const LogisticModel& model, const Matrix& x, std::span<const AuthorLabel> y) {
  const auto pred = classify_sentences(model, x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += pred.labels[i] == y[i];
  return y.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(y.size());
}

LogisticTrainResult train_logistic(const Matrix& x, std::span<const AuthorLabel> y, const LogisticConfig& config,
                                   const Matrix* val_x, std::span<const AuthorLabel> val_y) {
  if (x.rows() != y.size()) fail(Errc::DimensionMismatch, "feature rows and labels differ in length");
  const auto generated = std::count(y.begin(), y.end(), AuthorLabel::Generated);
  if (generated == 0 || generated == static_cast<std::ptrdiff_t>(y.size())) {
    fail(Errc::SingleClassCorpus, "logistic regression needs both labels in the training data");
  }
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  double max_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 1.0;  // bias feature
    for (double v : x.row(i)) s += v * v;
    max_sq = std::max(max_sq, s);
  }
  const double step = config.learning_rate / (0.25 * max_sq);

  LogisticTrainResult result;
  LogisticModel model{std::vector<double>(d, 0.0), 0.0, 0.5};
  const Matrix& score_x = val_x ? *val_x : x;
  const auto score_y = val_x ? val_y : y;
  result.model = model;
  result.best_accuracy = logistic_accuracy(model, score_x, score_y);
  std::vector<double> grad(d);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_bias = 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = x.row(i);
      const double z = model.logit(row);
      loss += softplus(z) - target(y[i]) * z;
      const double err = sigmoid(z) - target(y[i]);
      for (std::size_t j = 0; j < d; ++j) grad[j] += err * row[j];
      grad_bias += err;
    }
    result.loss_per_epoch.push_back(loss / static_cast<double>(n));
    const double scale = step / static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) model.weights[j] -= scale * grad[j];
    model.bias -= scale * grad_bias;
    const double acc = logistic_accuracy(model, score_x, score_y);
    if (acc > result.best_accuracy) {
      result.best_accuracy = acc;
      result.best_epoch = epoch;
      result.model = model;
    }
  }
  result.loss_per_epoch.push_back(logistic_loss(model, x, y));
  // A zero model is a coin flip at the threshold; prefer the trained one on ties.
  if (result.best_epoch == 0 && config.epochs > 0) result.model = model;
  return result;
}

LabelSequence classify_sentences(const LogisticModel& model, const Matrix& x) {
  check_dims(model, x);
  LabelSequence seq;
  seq.labels.reserve(x.rows());
  seq.confidence.reserve(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double s = sigmoid(model.logit(x.row(i)));
    seq.labels.push_back(s >= model.threshold ? AuthorLabel::Generated : AuthorLabel::Human);
    seq.confidence.push_back(std::max(s, 1.0 - s));
  }
  return seq;
}

BoundaryPrediction transitions_to_boundaries(const LabelSequence& labels, std::optional<std::size_t> k) {
  BoundaryPrediction pred;
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (labels.labels[i - 1] != labels.labels[i]) {
      const double c0 = i - 1 < labels.confidence.size() ? labels.confidence[i - 1] : 1.0;
      const double c1 = i < labels.confidence.size() ? labels.confidence[i] : 1.0;
      pred.candidates.push_back({i, std::min(c0, c1)});
    }
  }
  std::stable_sort(pred.candidates.begin(), pred.candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
  if (k && pred.candidates.size() > *k) pred.candidates.resize(*k);
  return pred;
}

BoundaryPrediction random_boundaries(std::size_t n, std::size_t k, Rng& rng) {
  if (n < 2) fail(Errc::TooFewSentences, "random boundaries need n >= 2");
  std::vector<std::size_t> positions(n - 1);
  std::iota(positions.begin(), positions.end(), std::size_t{1});
  const std::size_t take = std::min(k, n - 1);
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(positions.size() - i));
    std::swap(positions[i], positions[j]);
  }
  BoundaryPrediction pred;
  pred.method_id = "random(K=" + std::to_string(k) + ")";
  for (std::size_t i = 0; i < take; ++i) pred.candidates.push_back({positions[i], 1.0});
  return pred;
}

void save_logistic(const LogisticModel& model, const std::string& provider_id, const std::filesystem::path& path) {
  json obj = {{"weights", model.weights}, {"bias", model.bias}, {"threshold", model.threshold},
              {"provider_id", provider_id}};
  write_text_file(path, obj.dump() + "\n");
}

LoadedLogistic load_logistic(const std::filesystem::path& path) {
  try {
    const auto obj = json::parse(read_text_file(path));
    LoadedLogistic out;
    out.model.weights = obj.at("weights").get<std::vector<double>>();
    out.model.bias = obj.at("bias").get<double>();
    out.model.threshold = obj.value("threshold", 0.5);
    out.provider_id = obj.value("provider_id", std::string());
    if (!(out.model.threshold > 0.0 && out.model.threshold < 1.0)) fail(Errc::Schema, "threshold must be in (0, 1)");
    return out;
  } catch (const json::parse_error& e) {
    fail(Errc::Parse, path.string() + ": " + e.what());
  } catch (const json::exception& e) {
    fail(Errc::Schema, path.string() + ": " + e.what());
  }
}

}  // namespace seamline
