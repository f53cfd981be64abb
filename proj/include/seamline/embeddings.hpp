#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "seamline/matrix.hpp"

namespace seamline {

struct EmbeddingMatrix {
  Matrix vectors;  // n x dim
  std::string provider_id;

  std::size_t size() const { return vectors.rows(); }
  std::size_t dim() const { return vectors.cols(); }
};

/// Turns sentences into fixed-dimension vectors. Implementations must be
/// deterministic and safe for concurrent embed() calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual EmbeddingMatrix embed(std::span<const std::string> sentences) const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string provider_id() const = 0;
};

inline constexpr std::size_t kDefaultHashingDim = 256;

/// Signed feature hashing of character 3-grams, L2-normalized.
class HashingEmbedder final : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(std::size_t dim = kDefaultHashingDim, std::uint64_t seed = 0);

  EmbeddingMatrix embed(std::span<const std::string> sentences) const override;
  std::size_t dim() const override { return dim_; }
  std::string provider_id() const override;

  /// Single-sentence kernel; writes dim() values into out.
  void embed_one(std::string_view sentence, std::span<double> out) const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Serves precomputed vectors by exact sentence text. Used for synthetic
/// fixtures whose geometry is controlled directly.
class LookupProvider final : public EmbeddingProvider {
 public:
  LookupProvider(std::size_t dim, std::string provider_id = "lookup");

  void insert(std::string sentence, std::vector<double> vector);
  EmbeddingMatrix embed(std::span<const std::string> sentences) const override;
  std::size_t dim() const override { return dim_; }
  std::string provider_id() const override { return id_; }

 private:
  std::size_t dim_;
  std::string id_;
  std::unordered_map<std::string, std::vector<double>> table_;
};

/// 128-bit content hash of a sentence, lowercase hex.
std::string content_key(std::string_view sentence);

/// Append-only JSON-lines cache in front of another provider. The first
/// line holds {"provider_id", "dim"}; each further line {"key", "vec"}.
class CachedProvider final : public EmbeddingProvider {
 public:
  CachedProvider(std::shared_ptr<const EmbeddingProvider> inner, std::filesystem::path cache_path);

  EmbeddingMatrix embed(std::span<const std::string> sentences) const override;
  std::size_t dim() const override { return inner_->dim(); }
  std::string provider_id() const override { return inner_->provider_id(); }

  std::size_t entries() const;

 private:
  std::shared_ptr<const EmbeddingProvider> inner_;
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, std::vector<double>> rows_;
};

/// Free-function form: embed through a cache file at cache_path.
EmbeddingMatrix cached_embed(std::shared_ptr<const EmbeddingProvider> provider,
                             std::span<const std::string> sentences,
                             const std::filesystem::path& cache_path);

inline constexpr std::size_t kRemoteBatchSize = 64;

/// Client of the embedding bridge (POST /embed, GET /health).
class RemoteProvider final : public EmbeddingProvider {
 public:
  struct Options {
    std::size_t batch_size = kRemoteBatchSize;
    int max_retries = 3;
    int backoff_ms = 200;
    std::string model_id;
  };

  explicit RemoteProvider(std::string endpoint);
  RemoteProvider(std::string endpoint, Options options);

  EmbeddingMatrix embed(std::span<const std::string> sentences) const override;
  std::size_t dim() const override;
  std::string provider_id() const override;

 private:
  void ensure_health() const;
  std::string post_with_retry(const std::string& path, const std::string& body) const;

  std::string endpoint_;
  Options options_;
  mutable std::mutex mutex_;
  mutable std::size_t dim_ = 0;
  mutable std::string model_id_;
};

/// Equivalent to RemoteProvider(endpoint).embed(sentences).
EmbeddingMatrix remote_embed(const std::string& endpoint, std::span<const std::string> sentences);

/// Equivalent to HashingEmbedder(dim, seed).embed(sentences).
EmbeddingMatrix hashing_embed(std::span<const std::string> sentences,
                              std::size_t dim = kDefaultHashingDim, std::uint64_t seed = 0);

/// "hashing", "hashing:DIM", "cache:PATH" (hashing behind a cache),
/// "remote:URL" or "remote" (URL from SEAMLINE_BRIDGE_URL).
std::shared_ptr<const EmbeddingProvider> make_provider(const std::string& spec, std::uint64_t seed = 0);

}  // namespace seamline
