#include "seamline/scoring.hpp"

#include <algorithm>
#include <set>

#include "seamline/error.hpp"

namespace seamline {

double f1_at_k(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  if (truth.empty()) fail(Errc::EmptyTruth, "F1@K needs at least one true boundary");
  const std::set<std::size_t> truth_set(truth.begin(), truth.end());
  const std::set<std::size_t> predicted_set(predicted.begin(), predicted.end());
  std::size_t hits = 0;
  for (auto p : predicted_set) hits += truth_set.count(p);
  return 2.0 * static_cast<double>(hits) / static_cast<double>(predicted_set.size() + truth_set.size());
}

double f1_at_k(const BoundaryPrediction& predicted, std::span<const std::size_t> truth) {
  const auto positions = predicted.positions();
  return f1_at_k(positions, truth);
}

double expected_random_f1(double n, std::size_t b, std::size_t k) {
  const double positions = n - 1.0;
  if (n < 2.0) fail(Errc::Domain, "n must be >= 2");
  if (b < 1 || static_cast<double>(b) > positions) fail(Errc::Domain, "b must be in [1, n-1]");
  if (k < 1 || static_cast<double>(k) > positions) fail(Errc::Domain, "K must be in [1, n-1]");
  const auto kb = static_cast<double>(k) * static_cast<double>(b);
  return 2.0 * (kb / positions) / static_cast<double>(k + b);
}

}  // namespace seamline
