#include "seamline/metric.hpp"

#include <cmath>
#include <sstream>

#include "seamline/corpus_io.hpp"
#include "seamline/detector.hpp"
#include "seamline/error.hpp"
#include "seamline/scoring.hpp"

namespace seamline {

using nlohmann::json;

ProjectionHead ProjectionHead::identity(std::size_t d) {
  return ProjectionHead{Matrix::identity(d), std::vector<double>(d, 0.0)};
}

ProjectionHead ProjectionHead::identity_with_noise(std::size_t d, double scale, Rng& rng) {
  auto head = identity(d);
  for (double& w : head.weights.data()) w += scale * rng.normal();
  return head;
}

Matrix project(const ProjectionHead& head, const Matrix& x) {
  if (x.cols() != head.d_in()) {
    fail(Errc::DimensionMismatch, "head expects dim " + std::to_string(head.d_in()) + ", got " +
                                      std::to_string(x.cols()));
  }
  return kernels::omp::affine_rows(head.weights, head.bias, x);
}

SentencePool build_pool(const std::vector<HybridDocument>& docs, const EmbeddingProvider& provider) {
  SentencePool pool;
  pool.doc_vectors.reserve(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& doc = docs[d];
    if (!doc.fully_labeled()) fail(Errc::UnlabeledSentence, "training document " + doc.doc_id + " is not fully labeled");
    auto emb = provider.embed(doc.texts()).vectors;
    pool.doc_start.push_back(pool.labels.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
      pool.vectors.append_row(emb.row(i));
      pool.labels.push_back(*doc.sentences[i].label);
      pool.doc_of.push_back(d);
    }
    pool.doc_vectors.push_back(std::move(emb));
  }
  return pool;
}

std::vector<Triplet> sample_triplets(std::span<const AuthorLabel> labels, std::span<const std::size_t> doc_of,
                                     std::size_t count, Rng& rng) {
  std::vector<std::size_t> by_label[2];
  std::vector<std::vector<std::size_t>> doc_label_members;  // doc * 2 + label
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto l = static_cast<std::size_t>(labels[i]);
    by_label[l].push_back(i);
    const auto slot = doc_of[i] * 2 + l;
    if (doc_label_members.size() <= slot) doc_label_members.resize(slot + 1);
    doc_label_members[slot].push_back(i);
  }
  if (by_label[0].size() < 2 || by_label[1].size() < 2) {
    fail(Errc::SingleClassCorpus, "triplets need at least two sentences of each label (have " +
                                      std::to_string(by_label[0].size()) + " H, " +
                                      std::to_string(by_label[1].size()) + " G)");
  }
  // Draw uniformly from `pool` excluding one member.
  auto pick_other = [&](const std::vector<std::size_t>& members, std::size_t exclude) {
    for (;;) {
      const auto c = members[rng.below(members.size())];
      if (c != exclude) return c;
    }
  };
  std::vector<Triplet> out;
  out.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    const auto anchor = static_cast<std::size_t>(rng.below(labels.size()));
    const auto l = static_cast<std::size_t>(labels[anchor]);
    const auto& local = doc_label_members[doc_of[anchor] * 2 + l];
    const auto positive = local.size() >= 2 ? pick_other(local, anchor) : pick_other(by_label[l], anchor);
    const auto& others = by_label[1 - l];
    const auto negative = others[rng.below(others.size())];
    out.push_back({anchor, positive, negative});
  }
  return out;
}

std::vector<Triplet> sample_triplets(const SentencePool& pool, std::size_t count, Rng& rng) {
  return sample_triplets(pool.labels, pool.doc_of, count, rng);
}

double triplet_loss(const ProjectionHead& head, std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin) {
  if (anchor.size() != head.d_in() || positive.size() != head.d_in() || negative.size() != head.d_in()) {
    fail(Errc::DimensionMismatch, "triplet vectors do not match head input dim");
  }
  Matrix pool(0, 0);
  pool.append_row(anchor);
  pool.append_row(positive);
  pool.append_row(negative);
  const Triplet t{0, 1, 2};
  return triplet_loss(head, pool, std::span<const Triplet>(&t, 1), margin);
}

double triplet_loss(const ProjectionHead& head, const Matrix& pool, std::span<const Triplet> batch, double margin) {
  return loss_gradient(head, pool, batch, margin).loss;
}

HeadGradient loss_gradient(const ProjectionHead& head, const Matrix& pool, std::span<const Triplet> batch,
                           double margin) {
  if (pool.cols() != head.d_in()) {
    fail(Errc::DimensionMismatch, "pool dim " + std::to_string(pool.cols()) + " != head input dim " +
                                      std::to_string(head.d_in()));
  }
  auto g = kernels::omp::triplet_loss_gradient(head.weights, head.bias, pool, batch, margin);
  return HeadGradient{std::move(g.grad_weights), std::move(g.grad_bias), g.loss};
}

void TrainConfig::validate() const {
  if (!(decay > 0.0 && decay < 1.0)) fail(Errc::InvalidArgument, "decay must be in (0, 1)");
  if (epoch_size < 1) fail(Errc::InvalidArgument, "epoch_size must be >= 1");
  if (!(margin > 0.0)) fail(Errc::InvalidArgument, "margin must be > 0");
  if (batch_size < 1) fail(Errc::InvalidArgument, "batch_size must be >= 1");
  if (patience < 1) fail(Errc::InvalidArgument, "patience must be >= 1");
  for (double r : lr_grid) {
    if (!(r > 0.0)) fail(Errc::InvalidArgument, "learning rates must be positive");
  }
  if (lr_grid.empty() && !(learning_rate > 0.0)) fail(Errc::InvalidArgument, "learning rate must be positive");
}

json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"lr_grid", c.lr_grid},   {"decay", c.decay},
          {"epoch_size", c.epoch_size},       {"margin", c.margin},     {"patience", c.patience},
          {"max_epochs", c.max_epochs},       {"batch_size", c.batch_size}, {"init_noise", c.init_noise},
          {"validation_p", c.validation_p},   {"validation_k", c.validation_k}, {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.lr_grid = j.value("lr_grid", c.lr_grid);
  c.decay = j.value("decay", c.decay);
  c.epoch_size = j.value("epoch_size", c.epoch_size);
  c.margin = j.value("margin", c.margin);
  c.patience = j.value("patience", c.patience);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.init_noise = j.value("init_noise", c.init_noise);
  c.validation_p = j.value("validation_p", c.validation_p);
  c.validation_k = j.value("validation_k", c.validation_k);
  c.seed = j.value("seed", c.seed);
  return c;
}

double scheduled_rate(double rate0, double decay, std::size_t epoch) {
  return rate0 * std::pow(1.0 - decay, static_cast<double>(epoch));
}

json to_json(const TrainHistory& h) {
  json epochs = json::array();
  for (const auto& e : h.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_f1", e.val_f1},
                      {"learning_rate", e.learning_rate}});
  }
  json grid = json::array();
  for (const auto& [rate, f1] : h.grid) grid.push_back({{"learning_rate", rate}, {"best_val_f1", f1}});
  return {{"learning_rate", h.learning_rate}, {"initial_val_f1", h.initial_val_f1},
          {"epochs", epochs},                 {"best_epoch", h.best_epoch},
          {"best_val_f1", h.best_val_f1},     {"early_stopped", h.early_stopped},
          {"grid", grid}};
}

namespace {

bool all_finite(const Matrix& m) {
  for (double v : m.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

TrainResult train_single_rate(const SentencePool& pool, const Validator& validate, const TrainConfig& config,
                              double rate0) {
  Rng rng(config.seed);
  TrainResult result;
  result.head = ProjectionHead::identity_with_noise(pool.vectors.cols(), config.init_noise, rng);
  auto& h = result.history;
  h.learning_rate = rate0;
  if (config.max_epochs == 0) return result;

  h.initial_val_f1 = validate(result.head);
  h.best_val_f1 = h.initial_val_f1;
  auto head = result.head;
  double previous = h.initial_val_f1;
  std::size_t stale = 0;
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const double rate = scheduled_rate(rate0, config.decay, epoch);
    const auto triplets = sample_triplets(pool, config.epoch_size, rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < triplets.size(); begin += config.batch_size) {
      const auto end = std::min(triplets.size(), begin + config.batch_size);
      const std::span<const Triplet> batch(triplets.data() + begin, end - begin);
      auto grad = loss_gradient(head, pool.vectors, batch, config.margin);
      if (!std::isfinite(grad.loss)) {
        std::ostringstream msg;
        msg << "loss became " << grad.loss << " at epoch " << epoch + 1 << ", batch " << batches + 1
            << ", learning rate " << rate;
        fail(Errc::NonFiniteLoss, msg.str());
      }
      loss_sum += grad.loss;
      ++batches;
      auto w = head.weights.data();
      const auto gw = grad.weights.data();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= rate * gw[i];
      for (std::size_t i = 0; i < head.bias.size(); ++i) head.bias[i] -= rate * grad.bias[i];
    }
    if (!all_finite(head.weights)) {
      fail(Errc::NonFiniteLoss, "weights became non-finite at epoch " + std::to_string(epoch + 1) +
                                    " with learning rate " + std::to_string(rate));
    }
    const double val = validate(head);
    h.epochs.push_back({epoch + 1, loss_sum / static_cast<double>(batches), val, rate});
    if (val > h.best_val_f1) {
      h.best_val_f1 = val;
      h.best_epoch = epoch + 1;
      result.head = head;
    }
    if (val > previous) {
      stale = 0;
    } else if (++stale >= config.patience) {
      h.early_stopped = true;
      break;
    }
    previous = val;
  }
  return result;
}

}  // namespace

TrainResult train_projection(const SentencePool& pool, const Validator& validate, const TrainConfig& config) {
  config.validate();
  // Fail early (and independently of max_epochs) on a one-class corpus.
  {
    Rng probe(0);
    sample_triplets(pool, 0, probe);
  }
  const std::vector<double> rates = config.lr_grid.empty() ? std::vector<double>{config.learning_rate}
                                                           : config.lr_grid;
  TrainResult best;
  bool have_best = false;
  std::vector<std::pair<double, double>> grid;
  for (double rate : rates) {
    auto r = train_single_rate(pool, validate, config, rate);
    grid.emplace_back(rate, r.history.best_val_f1);
    if (!have_best || r.history.best_val_f1 > best.history.best_val_f1) {
      best = std::move(r);
      have_best = true;
    }
  }
  best.history.grid = std::move(grid);
  return best;
}

double validation_f1(const ProjectionHead& head, const SentencePool& val_pool,
                     const std::vector<HybridDocument>& val_docs, std::size_t p, std::size_t k) {
  double sum = 0.0;
  std::size_t scored = 0;
  for (std::size_t d = 0; d < val_docs.size(); ++d) {
    const auto truth = ground_truth_boundaries(val_docs[d]);
    if (truth.empty() || val_docs[d].size() < 2) continue;
    const auto pred = detect_embedded(val_pool.doc_vectors[d], &head, PrototypeParams{p, k});
    sum += f1_at_k(pred, truth);
    ++scored;
  }
  return scored == 0 ? 0.0 : sum / static_cast<double>(scored);
}

TrainResult train_projection(const std::vector<HybridDocument>& train_docs,
                             const std::vector<HybridDocument>& val_docs, const EmbeddingProvider& provider,
                             const TrainConfig& config) {
  if (train_docs.empty() || val_docs.empty()) {
    fail(Errc::EmptyCorpus, "training needs non-empty train and validation splits");
  }
  const auto train_pool = build_pool(train_docs, provider);
  const auto val_pool = build_pool(val_docs, provider);
  {
    Rng probe(0);
    sample_triplets(val_pool, 0, probe);
  }
  const Validator validate = [&](const ProjectionHead& head) {
    return validation_f1(head, val_pool, val_docs, config.validation_p, config.validation_k);
  };
  return train_projection(train_pool, validate, config);
}

void save_head(const ProjectionHead& head, const std::string& provider_id, const json& config,
               const std::filesystem::path& path) {
  json weights = json::array();
  for (std::size_t r = 0; r < head.d_out(); ++r) {
    const auto row = head.weights.row(r);
    weights.push_back(std::vector<double>(row.begin(), row.end()));
  }
  json obj = {{"d_in", head.d_in()}, {"d_out", head.d_out()}, {"weights", weights},
              {"bias", head.bias},   {"provider_id", provider_id}, {"config", config}};
  write_text_file(path, obj.dump() + "\n");
}

LoadedHead load_head(const std::filesystem::path& path) {
  json obj;
  try {
    obj = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    fail(Errc::Parse, path.string() + ": " + e.what());
  }
  try {
    const auto d_in = obj.at("d_in").get<std::size_t>();
    const auto d_out = obj.at("d_out").get<std::size_t>();
    LoadedHead loaded;
    loaded.head.weights = Matrix(d_out, d_in);
    const auto& rows = obj.at("weights");
    if (rows.size() != d_out) fail(Errc::Schema, "head weights have wrong row count");
    for (std::size_t r = 0; r < d_out; ++r) {
      const auto row = rows[r].get<std::vector<double>>();
      if (row.size() != d_in) fail(Errc::Schema, "head weights have wrong column count");
      std::copy(row.begin(), row.end(), loaded.head.weights.row(r).begin());
    }
    loaded.head.bias = obj.at("bias").get<std::vector<double>>();
    if (loaded.head.bias.size() != d_out) fail(Errc::Schema, "head bias has wrong length");
    loaded.provider_id = obj.value("provider_id", std::string());
    loaded.config = obj.value("config", json::object());
    return loaded;
  } catch (const json::exception& e) {
    fail(Errc::Schema, path.string() + ": " + e.what());
  }
}

}  // namespace seamline
