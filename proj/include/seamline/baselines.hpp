#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "seamline/corpus.hpp"
#include "seamline/detector.hpp"
#include "seamline/matrix.hpp"
#include "seamline/rng.hpp"

namespace seamline {

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
  double threshold = 0.5;

  double logit(std::span<const double> x) const;
};

struct LogisticConfig {
  /// Step size in units of 1/L, where L bounds the loss curvature
  /// (0.25 * max squared row norm, bias included). Values <= 1 guarantee
  /// a non-increasing training loss.
  double learning_rate = 1.0;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
};

struct LogisticTrainResult {
  LogisticModel model;
  std::vector<double> loss_per_epoch;  // training loss before each update, plus final
  std::size_t best_epoch = 0;
  double best_accuracy = 0.0;
};

double sigmoid(double z);

/// Mean cross-entropy, label Generated = 1.
double logistic_loss(const LogisticModel& model, const Matrix& x, std::span<const AuthorLabel> y);
double logistic_accuracy(const LogisticModel& model, const Matrix& x, std::span<const AuthorLabel> y);

/// Full-batch gradient descent from zero weights. Keeps the parameters
/// with the best accuracy on the validation set (or the training set when
/// no validation data is given). Throws SingleClassCorpus.
LogisticTrainResult train_logistic(const Matrix& x, std::span<const AuthorLabel> y, const LogisticConfig& config,
                                   const Matrix* val_x = nullptr, std::span<const AuthorLabel> val_y = {});

struct LabelSequence {
  std::vector<AuthorLabel> labels;
  std::vector<double> confidence;  // in [0.5, 1] for the logistic model
  std::size_t size() const { return labels.size(); }
};

/// sigmoid(w.x + b) >= threshold -> Generated; confidence max(s, 1 - s).
LabelSequence classify_sentences(const LogisticModel& model, const Matrix& x);

/// Positions where consecutive predicted labels differ, scored by the
/// smaller of the two confidences. With k set, keeps the k best.
BoundaryPrediction transitions_to_boundaries(const LabelSequence& labels, std::optional<std::size_t> k);

/// min(K, n-1) distinct positions drawn uniformly from [1, n-1].
BoundaryPrediction random_boundaries(std::size_t n, std::size_t k, Rng& rng);

void save_logistic(const LogisticModel& model, const std::string& provider_id, const std::filesystem::path& path);
struct LoadedLogistic {
  LogisticModel model;
  std::string provider_id;
};
LoadedLogistic load_logistic(const std::filesystem::path& path);

}  // namespace seamline
