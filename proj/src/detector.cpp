#include "seamline/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seamline/error.hpp"
#include "seamline/kernels.hpp"
#include "seamline/metric.hpp"

namespace seamline {

std::vector<std::size_t> BoundaryPrediction::positions() const {
  std::vector<std::size_t> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(c.position);
  return out;
}

std::vector<double> prototype(const Matrix& x, std::size_t position, Side side, std::size_t p) {
  const std::size_t n = x.rows();
  if (p == 0) fail(Errc::InvalidArgument, "prototype size must be >= 1");
  // The window must hold at least one row: left needs i in [1, n],
  // right needs i in [0, n-1].
  const bool ok = side == Side::Left ? position >= 1 && position <= n : position + 1 <= n;
  if (!ok) {
    fail(Errc::PositionOutOfRange, "position " + std::to_string(position) + " has an empty " +
                                       (side == Side::Left ? "left" : "right") + " window in a " +
                                       std::to_string(n) + "-row matrix");
  }
  std::size_t lo = 0, hi = 0;  // 1-based inclusive rows
  if (side == Side::Left) {
    lo = position >= p ? position - p + 1 : 1;
    hi = position;
  } else {
    lo = position + 1;
    hi = std::min(n, position + p);
  }
  std::vector<double> mean(x.cols(), 0.0);
  for (std::size_t r = lo; r <= hi; ++r) {
    const auto row = x.row(r - 1);
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += row[j];
  }
  const auto count = static_cast<double>(hi - lo + 1);
  for (double& v : mean) v /= count;
  return mean;
}

DistanceProfile distance_profile(const Matrix& x, std::size_t p) {
  if (x.rows() < 2) fail(Errc::TooFewSentences, "a distance profile needs at least 2 sentences");
  if (p == 0) fail(Errc::InvalidArgument, "prototype size must be >= 1");
  return DistanceProfile{kernels::omp::distance_profile(x, p)};
}

BoundaryPrediction top_k_boundaries(const DistanceProfile& profile, std::size_t k) {
  std::vector<std::size_t> order(profile.size());
  std::iota(order.begin(), order.end(), std::size_t{1});
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double sa = profile.at(a), sb = profile.at(b);
                      return sa != sb ? sa > sb : a < b;
                    });
  BoundaryPrediction pred;
  pred.candidates.reserve(take);
  for (std::size_t i = 0; i < take; ++i) pred.candidates.push_back({order[i], profile.at(order[i])});
  return pred;
}

std::string tribert_method_id(const PrototypeParams& params, bool trained) {
  return std::string(trained ? "tribert" : "tribert-nt") + "(p=" + std::to_string(params.p) +
         ",K=" + std::to_string(params.k) + ")";
}

BoundaryPrediction detect_embedded(const Matrix& embeddings, const ProjectionHead* head,
                                   const PrototypeParams& params) {
  if (params.k == 0) fail(Errc::InvalidArgument, "K must be >= 1");
  BoundaryPrediction pred;
  if (head) {
    pred = top_k_boundaries(distance_profile(project(*head, embeddings), params.p), params.k);
  } else {
    pred = top_k_boundaries(distance_profile(embeddings, params.p), params.k);
  }
  pred.method_id = tribert_method_id(params, head != nullptr);
  return pred;
}

BoundaryPrediction detect(const HybridDocument& doc, const EmbeddingProvider& provider,
                          const ProjectionHead* head, const PrototypeParams& params) {
  if (doc.size() < 2) fail(Errc::TooFewSentences, "document " + doc.doc_id + " has fewer than 2 sentences");
  const auto texts = doc.texts();
  return detect_embedded(provider.embed(texts).vectors, head, params);
}

}  // namespace seamline
