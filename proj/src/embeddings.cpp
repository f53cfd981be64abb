#include "seamline/embeddings.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "seamline/error.hpp"
#include "seamline/parallel.hpp"
#include "seamline/rng.hpp"

namespace seamline {

using nlohmann::json;

namespace {

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos; }

}  // namespace

HashingEmbedder::HashingEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 8) fail(Errc::InvalidArgument, "hashing dim must be at least 8");
}

std::string HashingEmbedder::provider_id() const {
  return "hashing:d=" + std::to_string(dim_) + ":seed=" + std::to_string(seed_);
}

void HashingEmbedder::embed_one(std::string_view sentence, std::span<double> out) const {
  if (blank(sentence)) fail(Errc::EmptySentence, "cannot embed a blank sentence");
  std::fill(out.begin(), out.end(), 0.0);
  const std::uint64_t basis = mix64(seed_ ^ 0x5eed5eedULL);
  auto add = [&](std::string_view gram) {
    const auto h = mix64(fnv1a64(gram, basis));
    const auto bucket = static_cast<std::size_t>(h % dim_);
    out[bucket] += (h >> 63) ? -1.0 : 1.0;
  };
  if (sentence.size() < 3) {
    add(sentence);
  } else {
    for (std::size_t i = 0; i + 3 <= sentence.size(); ++i) add(sentence.substr(i, 3));
  }
  double norm_sq = 0.0;
  for (double v : out) norm_sq += v * v;
  if (norm_sq == 0.0) {
    // Every feature cancelled; fall back to one whole-sentence feature.
    const auto h = mix64(fnv1a64(sentence, ~basis));
    out[h % dim_] = 1.0;
    return;
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double& v : out) v *= inv;
}

EmbeddingMatrix HashingEmbedder::embed(std::span<const std::string> sentences) const {
  EmbeddingMatrix m{Matrix(sentences.size(), dim_), provider_id()};
  parallel_for(sentences.size(), [&](std::size_t i) { embed_one(sentences[i], m.vectors.row(i)); });
  return m;
}

EmbeddingMatrix hashing_embed(std::span<const std::string> sentences, std::size_t dim, std::uint64_t seed) {
  return HashingEmbedder(dim, seed).embed(sentences);
}

LookupProvider::LookupProvider(std::size_t dim, std::string provider_id) : dim_(dim), id_(std::move(provider_id)) {}

void LookupProvider::insert(std::string sentence, std::vector<double> vector) {
  if (vector.size() != dim_) fail(Errc::DimensionMismatch, "lookup vector has wrong dimension");
  table_[std::move(sentence)] = std::move(vector);
}

EmbeddingMatrix LookupProvider::embed(std::span<const std::string> sentences) const {
  EmbeddingMatrix m{Matrix(sentences.size(), dim_), id_};
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    auto it = table_.find(sentences[i]);
    if (it == table_.end()) fail(Errc::InvalidArgument, "no vector registered for sentence: " + sentences[i]);
    std::copy(it->second.begin(), it->second.end(), m.vectors.row(i).begin());
  }
  return m;
}

std::string content_key(std::string_view sentence) {
  const auto a = fnv1a64(sentence);
  const auto b = mix64(fnv1a64(sentence, 0x84222325cbf29ce4ULL) ^ sentence.size());
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(a),
                static_cast<unsigned long long>(b));
  return buf;
}

CachedProvider::CachedProvider(std::shared_ptr<const EmbeddingProvider> inner, std::filesystem::path cache_path)
    : inner_(std::move(inner)), path_(std::move(cache_path)) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;  // created on first append
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(Errc::Parse, path_.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
    if (line_no == 1) {
      const auto id = obj.value("provider_id", std::string());
      const auto dim = obj.value("dim", std::size_t{0});
      if (id != inner_->provider_id() || dim != inner_->dim()) {
        fail(Errc::CacheMismatch, "cache " + path_.string() + " holds " + id + " dim " + std::to_string(dim) +
                                      ", requested " + inner_->provider_id() + " dim " +
                                      std::to_string(inner_->dim()));
      }
      continue;
    }
    auto vec = obj.at("vec").get<std::vector<double>>();
    if (vec.size() != inner_->dim()) fail(Errc::CacheMismatch, "cache row has wrong dimension");
    rows_[obj.at("key").get<std::string>()] = std::move(vec);
  }
}

std::size_t CachedProvider::entries() const {
  std::lock_guard lock(mutex_);
  return rows_.size();
}

EmbeddingMatrix CachedProvider::embed(std::span<const std::string> sentences) const {
  const auto d = inner_->dim();
  EmbeddingMatrix m{Matrix(sentences.size(), d), inner_->provider_id()};
  std::vector<std::string> keys;
  keys.reserve(sentences.size());
  for (const auto& s : sentences) keys.push_back(content_key(s));

  std::vector<std::string> misses;
  {
    std::lock_guard lock(mutex_);
    std::unordered_map<std::string, bool> pending;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      if (!rows_.contains(keys[i]) && !pending.contains(keys[i])) {
        pending[keys[i]] = true;
        misses.push_back(sentences[i]);
      }
    }
  }
  if (!misses.empty()) {
    const auto computed = inner_->embed(misses);
    std::lock_guard lock(mutex_);
    const bool fresh = !std::filesystem::exists(path_);
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) fail(Errc::Io, "cannot append to cache " + path_.string());
    if (fresh) out << json{{"provider_id", inner_->provider_id()}, {"dim", d}}.dump() << '\n';
    for (std::size_t i = 0; i < misses.size(); ++i) {
      const auto key = content_key(misses[i]);
      if (rows_.contains(key)) continue;
      const auto row = computed.vectors.row(i);
      std::vector<double> vec(row.begin(), row.end());
      out << json{{"key", key}, {"vec", vec}}.dump() << '\n';
      rows_[key] = std::move(vec);
    }
  }
  std::lock_guard lock(mutex_);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& vec = rows_.at(keys[i]);
    std::copy(vec.begin(), vec.end(), m.vectors.row(i).begin());
  }
  return m;
}

EmbeddingMatrix cached_embed(std::shared_ptr<const EmbeddingProvider> provider,
                             std::span<const std::string> sentences,
                             const std::filesystem::path& cache_path) {
  return CachedProvider(std::move(provider), cache_path).embed(sentences);
}

RemoteProvider::RemoteProvider(std::string endpoint) : RemoteProvider(std::move(endpoint), Options{}) {}

RemoteProvider::RemoteProvider(std::string endpoint, Options options)
    : endpoint_(std::move(endpoint)), options_(std::move(options)) {
  while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
  if (options_.batch_size == 0 || options_.batch_size > kRemoteBatchSize) {
    fail(Errc::InvalidArgument, "remote batch size must be in 1..64");
  }
}

void RemoteProvider::ensure_health() const {
  std::lock_guard lock(mutex_);
  if (dim_ != 0) return;
  httplib::Client client(endpoint_);
  client.set_connection_timeout(5);
  for (int attempt = 0;; ++attempt) {
    auto res = client.Get("/health");
    if (res && res->status == 200) {
      try {
        const auto obj = json::parse(res->body);
        dim_ = obj.at("dim").get<std::size_t>();
        model_id_ = obj.at("model_id").get<std::string>();
      } catch (const json::exception& e) {
        fail(Errc::Protocol, std::string("malformed /health response: ") + e.what());
      }
      if (dim_ == 0) fail(Errc::Protocol, "bridge reports dim 0");
      return;
    }
    if (attempt >= options_.max_retries) {
      fail(Errc::Transport, "bridge at " + endpoint_ + " is not healthy" +
                                (res ? " (HTTP " + std::to_string(res->status) + ")" : ""));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(options_.backoff_ms << attempt));
  }
}

std::size_t RemoteProvider::dim() const {
  ensure_health();
  return dim_;
}

std::string RemoteProvider::provider_id() const {
  ensure_health();
  return "remote:" + model_id_;
}

std::string RemoteProvider::post_with_retry(const std::string& path, const std::string& body) const {
  httplib::Client client(endpoint_);
  client.set_connection_timeout(5);
  client.set_read_timeout(120);
  for (int attempt = 0;; ++attempt) {
    auto res = client.Post(path, body, "application/json");
    if (res && res->status == 200) return res->body;
    if (res && res->status >= 400 && res->status < 500) {
      fail(Errc::Protocol, "bridge rejected request with HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    if (attempt >= options_.max_retries) {
      fail(Errc::Transport, "POST " + endpoint_ + path + " failed" +
                                (res ? " with HTTP " + std::to_string(res->status) : ""));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(options_.backoff_ms << attempt));
  }
}

EmbeddingMatrix RemoteProvider::embed(std::span<const std::string> sentences) const {
  const auto d = dim();
  EmbeddingMatrix m{Matrix(sentences.size(), d), provider_id()};
  for (std::size_t begin = 0; begin < sentences.size(); begin += options_.batch_size) {
    const auto end = std::min(sentences.size(), begin + options_.batch_size);
    json request = {{"sentences", std::vector<std::string>(sentences.begin() + static_cast<std::ptrdiff_t>(begin),
                                                           sentences.begin() + static_cast<std::ptrdiff_t>(end))}};
    if (!options_.model_id.empty()) request["model_id"] = options_.model_id;
    const auto body = post_with_retry("/embed", request.dump());
    json response;
    try {
      response = json::parse(body);
    } catch (const json::parse_error& e) {
      fail(Errc::Protocol, std::string("malformed /embed response: ") + e.what());
    }
    if (!response.contains("vectors") || !response["vectors"].is_array()) {
      fail(Errc::Protocol, "/embed response lacks 'vectors'");
    }
    const auto& vectors = response["vectors"];
    if (vectors.size() != end - begin) {
      fail(Errc::Protocol, "/embed returned " + std::to_string(vectors.size()) + " rows for " +
                               std::to_string(end - begin) + " sentences");
    }
    if (response.value("dim", d) != d) fail(Errc::Protocol, "/embed dim differs from /health dim");
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      const auto& v = vectors[i];
      if (!v.is_array() || v.size() != d) fail(Errc::Protocol, "/embed row has wrong dimension");
      auto row = m.vectors.row(begin + i);
      for (std::size_t j = 0; j < d; ++j) {
        if (!v[j].is_number()) fail(Errc::Protocol, "/embed row holds a non-number");
        row[j] = v[j].get<double>();
        if (!std::isfinite(row[j])) fail(Errc::Protocol, "/embed row holds a non-finite value");
      }
    }
  }
  return m;
}

EmbeddingMatrix remote_embed(const std::string& endpoint, std::span<const std::string> sentences) {
  return RemoteProvider(endpoint).embed(sentences);
}

std::shared_ptr<const EmbeddingProvider> make_provider(const std::string& spec, std::uint64_t seed) {
  if (spec == "hashing") return std::make_shared<HashingEmbedder>(kDefaultHashingDim, seed);
  if (spec.starts_with("hashing:")) {
    const auto text = spec.substr(8);
    std::size_t dim = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), dim);
    if (ec != std::errc{} || end != text.data() + text.size()) {
      fail(Errc::InvalidArgument, "bad hashing dimension in '" + spec + "'");
    }
    return std::make_shared<HashingEmbedder>(dim, seed);
  }
  if (spec.starts_with("cache:")) {
    return std::make_shared<CachedProvider>(std::make_shared<HashingEmbedder>(kDefaultHashingDim, seed),
                                            spec.substr(6));
  }
  if (spec == "remote" || spec.starts_with("remote:")) {
    std::string url = spec.size() > 7 ? spec.substr(7) : "";
    if (url.empty()) {
      const char* env = std::getenv("SEAMLINE_BRIDGE_URL");
      if (!env || !*env) fail(Errc::InvalidArgument, "remote provider needs a URL or SEAMLINE_BRIDGE_URL");
      url = env;
    }
    return std::make_shared<RemoteProvider>(url);
  }
  fail(Errc::InvalidArgument, "unknown provider spec '" + spec + "'");
}

}  // namespace seamline
