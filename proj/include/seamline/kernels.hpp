#pragma once

// Data-parallel inner loops. Each kernel has a straightforward serial
// reference in kernels::serial and an OpenMP version in kernels::omp; the
// rest of the library calls the OpenMP versions, the serial ones are kept
// for tests and the benchmark.

#include <cstddef>
#include <span>
#include <vector>

#include "seamline/matrix.hpp"

namespace seamline::kernels {

/// Index triple into a pool of sentence vectors.
struct TripletIndex {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  friend bool operator==(const TripletIndex&, const TripletIndex&) = default;
};

struct TripletLossGradient {
  double loss = 0.0;        // mean hinge over the batch
  std::size_t active = 0;   // triplets with a positive hinge
  Matrix grad_weights;      // d_out x d_in
  std::vector<double> grad_bias;
};

namespace serial {

/// out.row(i) = weights * x.row(i) + bias
Matrix affine_rows(const Matrix& weights, std::span<const double> bias, const Matrix& x);

/// Recomputes both window means from scratch at every position.
std::vector<double> distance_profile(const Matrix& x, std::size_t p);

TripletLossGradient triplet_loss_gradient(const Matrix& weights, std::span<const double> bias,
                                          const Matrix& pool, std::span<const TripletIndex> batch,
                                          double margin);

}  // namespace serial

namespace omp {

Matrix affine_rows(const Matrix& weights, std::span<const double> bias, const Matrix& x);

/// Row prefix sums, then per-position window means and distances.
std::vector<double> distance_profile(const Matrix& x, std::size_t p);

/// Per-triplet terms in parallel, then gradient rows in parallel with a
/// fixed triplet order, so the result does not depend on the thread count.
TripletLossGradient triplet_loss_gradient(const Matrix& weights, std::span<const double> bias,
                                          const Matrix& pool, std::span<const TripletIndex> batch,
                                          double margin);

}  // namespace omp

}  // namespace seamline::kernels
