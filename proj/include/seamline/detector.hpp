#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "seamline/corpus.hpp"
#include "seamline/embeddings.hpp"
#include "seamline/matrix.hpp"

namespace seamline {

struct ProjectionHead;

inline constexpr std::size_t kDefaultK = 3;

struct PrototypeParams {
  std::size_t p = 1;  // prototype (window) size
  std::size_t k = kDefaultK;
};

struct DistanceProfile {
  /// scores[i - 1] is the score of position i, for i in [1, n-1].
  std::vector<double> scores;
  std::size_t size() const { return scores.size(); }
  double at(std::size_t position) const { return scores.at(position - 1); }
};

struct Candidate {
  std::size_t position = 0;
  double score = 0.0;
  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct BoundaryPrediction {
  std::vector<Candidate> candidates;  // descending score
  std::string method_id;

  std::vector<std::size_t> positions() const;
};

enum class Side { Left, Right };

/// Mean of the p rows ending at position i (left) or the p rows starting at
/// i+1 (right), truncated at the document edges. Positions are 1-based;
/// throws PositionOutOfRange when the window would be empty.
std::vector<double> prototype(const Matrix& x, std::size_t position, Side side, std::size_t p);

/// Euclidean distance between adjacent left/right prototypes at every
/// position. Throws TooFewSentences for n < 2.
DistanceProfile distance_profile(const Matrix& x, std::size_t p);

/// The min(K, n-1) highest-scoring positions; ties go to the smaller position.
BoundaryPrediction top_k_boundaries(const DistanceProfile& profile, std::size_t k);

std::string tribert_method_id(const PrototypeParams& params, bool trained);

/// Full detector on precomputed embeddings; applies the head if given.
BoundaryPrediction detect_embedded(const Matrix& embeddings, const ProjectionHead* head,
                                   const PrototypeParams& params);

/// Embeds the document's sentences, then detect_embedded.
BoundaryPrediction detect(const HybridDocument& doc, const EmbeddingProvider& provider,
                          const ProjectionHead* head, const PrototypeParams& params);

}  // namespace seamline
