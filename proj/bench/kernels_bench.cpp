// Times the serial reference kernels against the OpenMP versions.
//
//   seamline_bench [--threads N] [--reps R]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "seamline/kernels.hpp"
#include "seamline/parallel.hpp"
#include "seamline/rng.hpp"

using namespace seamline;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

double best_ms(int reps, const std::function<void()>& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  return best;
}

double sink = 0.0;

void row(const char* kernel, const std::string& shape, int reps, const std::function<void()>& serial,
         const std::function<void()>& parallel) {
  const double s = best_ms(reps, serial);
  const double p = best_ms(reps, parallel);
  std::printf("%-22s %-26s %10.3f %10.3f %8.2fx\n", kernel, shape.c_str(), s, p, s / p);
}

}  // namespace

int main(int argc, char** argv) {
  int threads = 0;
  int reps = 5;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (std::strcmp(argv[i], "--threads") == 0) threads = std::atoi(argv[i + 1]);
    else if (std::strcmp(argv[i], "--reps") == 0) reps = std::atoi(argv[i + 1]);
  }
  if (threads > 0) set_thread_count(threads);
  std::printf("threads: %d, best of %d\n\n", thread_count(), reps);
  std::printf("%-22s %-26s %10s %10s %9s\n", "kernel", "shape", "serial ms", "omp ms", "speedup");

  Rng rng(1);
  for (std::size_t n : {1000, 10000}) {
    for (std::size_t d : {256, 768}) {
      const auto w = random_matrix(d, d, rng);
      const std::vector<double> b(d, 0.1);
      const auto x = random_matrix(n, d, rng);
      const std::string shape = "n=" + std::to_string(n) + " d=" + std::to_string(d);
      row("affine_rows", shape, reps, [&] { sink += kernels::serial::affine_rows(w, b, x)(0, 0); },
          [&] { sink += kernels::omp::affine_rows(w, b, x)(0, 0); });
    }
  }
  for (std::size_t n : {64, 2000}) {
    for (std::size_t p : {1, 4, 6}) {
      const auto x = random_matrix(n, 768, rng);
      const std::string shape = "n=" + std::to_string(n) + " d=768 p=" + std::to_string(p);
      row("distance_profile", shape, reps, [&] { sink += kernels::serial::distance_profile(x, p)[0]; },
          [&] { sink += kernels::omp::distance_profile(x, p)[0]; });
    }
  }
  for (std::size_t batch : {32, 512}) {
    for (std::size_t d : {256, 768}) {
      const auto w = random_matrix(d, d, rng);
      const std::vector<double> b(d, 0.0);
      const auto pool = random_matrix(4000, d, rng);
      std::vector<kernels::TripletIndex> triplets;
      for (std::size_t t = 0; t < batch; ++t) triplets.push_back({rng.below(4000), rng.below(4000), rng.below(4000)});
      const std::string shape = "batch=" + std::to_string(batch) + " d=" + std::to_string(d);
      row("triplet_loss_gradient", shape, reps,
          [&] { sink += kernels::serial::triplet_loss_gradient(w, b, pool, triplets, 1.0).loss; },
          [&] { sink += kernels::omp::triplet_loss_gradient(w, b, pool, triplets, 1.0).loss; });
    }
  }
  if (std::isnan(sink)) std::printf("\n");
  return 0;
}
