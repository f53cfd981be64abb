#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "seamline/detector.hpp"

namespace seamline {

/// F1@K = 2 |L_topK ∩ L_Gt| / (|L_topK| + |L_Gt|), with |L_topK| the length
/// of the emitted candidate list. Throws EmptyTruth.
double f1_at_k(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);
double f1_at_k(const BoundaryPrediction& predicted, std::span<const std::size_t> truth);

/// Expected F1@K of K uniform distinct guesses among n-1 positions against
/// b true boundaries: 2 (K b / (n-1)) / (K + b).
double expected_random_f1(double n, std::size_t b, std::size_t k);

}  // namespace seamline
