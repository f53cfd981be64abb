#pragma once

// Fixtures shared by the unit tests and the acceptance runner.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include <httplib.h>

#include "seamline/corpus.hpp"
#include "seamline/embeddings.hpp"
#include "seamline/matrix.hpp"
#include "seamline/rng.hpp"

namespace seamline::testing {

/// "HHGG" -> document with sentences "<id> sentence 1." ... and those labels.
inline HybridDocument doc_from_labels(const std::string& labels, const std::string& doc_id = "doc",
                                      int prompt_id = 1, const std::string& source_id = "src") {
  std::vector<std::pair<std::string, std::optional<AuthorLabel>>> sentences;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    sentences.emplace_back(doc_id + " sentence " + std::to_string(i + 1) + ".",
                           labels[i] == 'G' ? AuthorLabel::Generated : AuthorLabel::Human);
  }
  return make_document(doc_id, prompt_id, source_id, sentences);
}

inline std::string labels_string(const std::vector<AuthorLabel>& labels) {
  std::string s;
  for (auto l : labels) s.push_back(l == AuthorLabel::Generated ? 'G' : 'H');
  return s;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("seamline-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

/// Documents whose sentence vectors are drawn directly from per-label
/// distributions and served through a LookupProvider.
struct VectorCorpus {
  std::vector<HybridDocument> docs;
  std::shared_ptr<LookupProvider> provider;
};

/// draw(label, doc_index, rng) returns the vector of one sentence.
using VectorDraw = std::function<std::vector<double>(AuthorLabel, std::size_t, Rng&)>;

inline VectorCorpus vector_corpus(const std::vector<std::string>& layouts, std::size_t dim, const VectorDraw& draw,
                                  Rng& rng, const std::string& prefix = "v") {
  VectorCorpus out;
  out.provider = std::make_shared<LookupProvider>(dim, "fixture:" + prefix);
  for (std::size_t d = 0; d < layouts.size(); ++d) {
    const std::string id = prefix + std::to_string(d);
    auto doc = doc_from_labels(layouts[d], id, static_cast<int>(d % 8) + 1, id);
    for (auto& s : doc.sentences) out.provider->insert(s.text, draw(*s.label, d, rng));
    out.docs.push_back(std::move(doc));
  }
  return out;
}

/// Layout with one boundary: h human sentences then g generated (or the
/// reverse when generated_first).
inline std::string single_boundary_layout(std::size_t h, std::size_t g, bool generated_first = false) {
  return generated_first ? std::string(g, 'G') + std::string(h, 'H') : std::string(h, 'H') + std::string(g, 'G');
}

/// Isotropic Gaussian clusters: class means differ by `separation` along a
/// random unit direction; `noise` is the RMS norm of each vector's noise,
/// so per-coordinate std is noise / sqrt(dim).
inline VectorDraw gaussian_clusters(std::size_t dim, double separation, double noise, Rng& rng) {
  std::vector<double> dir(dim);
  double norm = 0.0;
  for (auto& v : dir) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (auto& v : dir) v /= norm;
  const double coord_std = noise / std::sqrt(static_cast<double>(dim));
  return [dir, separation, coord_std](AuthorLabel label, std::size_t, Rng& r) {
    const double sign = label == AuthorLabel::Generated ? 0.5 : -0.5;
    std::vector<double> x(dir.size());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = sign * separation * dir[j] + coord_std * r.normal();
    return x;
  };
}

/// Minimal in-process HTTP server on an ephemeral localhost port.
class TestServer {
 public:
  TestServer() = default;
  ~TestServer() { stop(); }
  TestServer(const TestServer&) = delete;
  TestServer& operator=(const TestServer&) = delete;

  httplib::Server& server() { return server_; }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    for (int i = 0; i < 200 && !server_.is_running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace seamline::testing
