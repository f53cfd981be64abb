#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "seamline/corpus.hpp"
#include "seamline/embeddings.hpp"
#include "seamline/kernels.hpp"
#include "seamline/matrix.hpp"
#include "seamline/rng.hpp"

namespace seamline {

/// Trainable affine map applied to frozen sentence embeddings.
struct ProjectionHead {
  Matrix weights;             // d_out x d_in
  std::vector<double> bias;   // d_out

  std::size_t d_in() const { return weights.cols(); }
  std::size_t d_out() const { return weights.rows(); }

  static ProjectionHead identity(std::size_t d);
  /// Identity plus N(0, scale^2) noise on every weight; zero bias.
  static ProjectionHead identity_with_noise(std::size_t d, double scale, Rng& rng);

  friend bool operator==(const ProjectionHead&, const ProjectionHead&) = default;
};

/// Row-wise weights * x + bias. Throws DimensionMismatch.
Matrix project(const ProjectionHead& head, const Matrix& x);

using Triplet = kernels::TripletIndex;

/// Labeled sentence vectors of a corpus, flattened in document order.
struct SentencePool {
  Matrix vectors;
  std::vector<AuthorLabel> labels;
  std::vector<std::size_t> doc_of;   // index of the owning document
  std::vector<std::size_t> doc_start; // first pool row of each document
  std::vector<Matrix> doc_vectors;    // per-document embeddings

  std::size_t size() const { return labels.size(); }
};

/// Embeds every sentence of the (fully labeled) documents.
SentencePool build_pool(const std::vector<HybridDocument>& docs, const EmbeddingProvider& provider);

/// Anchors uniform over all sentences; positives from the anchor's own
/// document when it has another same-label sentence, otherwise corpus-wide;
/// negatives uniform over the other label corpus-wide. Throws
/// SingleClassCorpus unless each label has at least two sentences.
std::vector<Triplet> sample_triplets(const SentencePool& pool, std::size_t count, Rng& rng);
std::vector<Triplet> sample_triplets(std::span<const AuthorLabel> labels, std::span<const std::size_t> doc_of,
                                     std::size_t count, Rng& rng);

/// max(0, |h(a) - h(p)| - |h(a) - h(n)| + margin) for one triplet of raw vectors.
double triplet_loss(const ProjectionHead& head, std::span<const double> anchor,
                    std::span<const double> positive, std::span<const double> negative, double margin);

/// Mean hinge over a batch of pool triplets.
double triplet_loss(const ProjectionHead& head, const Matrix& pool, std::span<const Triplet> batch, double margin);

struct HeadGradient {
  Matrix weights;
  std::vector<double> bias;
  double loss = 0.0;
};

/// Exact subgradient of the batch loss (zero where a distance is zero).
HeadGradient loss_gradient(const ProjectionHead& head, const Matrix& pool, std::span<const Triplet> batch,
                           double margin);

/// Learning rates used for full-encoder fine-tuning; kept as a preset.
inline const std::vector<double> kFineTuneLrGrid = {1e-6, 5e-6, 1e-5};
inline const std::vector<double> kHeadLrGrid = {1e-4, 1e-3, 1e-2};

struct TrainConfig {
  double learning_rate = 1e-3;            // used when lr_grid is empty
  std::vector<double> lr_grid = kHeadLrGrid;
  double decay = 0.2;                     // fraction removed after each epoch
  std::size_t epoch_size = 5000;          // triplets per epoch
  double margin = 1.0;
  std::size_t patience = 1;
  std::size_t max_epochs = 20;
  std::size_t batch_size = 32;
  double init_noise = 1e-3;
  std::size_t validation_p = 1;
  std::size_t validation_k = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Learning rate of epoch t (0-based): rate0 * (1 - decay)^t.
double scheduled_rate(double rate0, double decay, std::size_t epoch);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_f1 = 0.0;
  double learning_rate = 0.0;
};

struct TrainHistory {
  double learning_rate = 0.0;  // initial rate of the selected run
  double initial_val_f1 = 0.0;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0 = the initial head
  double best_val_f1 = 0.0;
  bool early_stopped = false;
  /// (initial rate, best validation F1) for every rate tried.
  std::vector<std::pair<double, double>> grid;
};

nlohmann::json to_json(const TrainHistory& history);

struct TrainResult {
  ProjectionHead head;
  TrainHistory history;
};

using Validator = std::function<double(const ProjectionHead&)>;

/// Core loop over a prebuilt pool with an arbitrary validation score.
TrainResult train_projection(const SentencePool& pool, const Validator& validate, const TrainConfig& config);

/// Mean F1@K (detector at validation_p) over documents with >= 1 boundary.
double validation_f1(const ProjectionHead& head, const SentencePool& val_pool,
                     const std::vector<HybridDocument>& val_docs, std::size_t p, std::size_t k);

/// Trains on train_docs with early stopping on val_docs.
TrainResult train_projection(const std::vector<HybridDocument>& train_docs,
                             const std::vector<HybridDocument>& val_docs, const EmbeddingProvider& provider,
                             const TrainConfig& config);

/// {"d_in", "d_out", "weights", "bias", "provider_id", "config"}.
void save_head(const ProjectionHead& head, const std::string& provider_id, const nlohmann::json& config,
               const std::filesystem::path& path);
struct LoadedHead {
  ProjectionHead head;
  std::string provider_id;
  nlohmann::json config;
};
LoadedHead load_head(const std::filesystem::path& path);

}  // namespace seamline
