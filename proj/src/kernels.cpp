#include "seamline/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace seamline::kernels {

namespace {

void matvec(const Matrix& w, std::span<const double> x, std::span<double> out) {
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const auto row = w.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) s += row[c] * x[c];
    out[r] = s;
  }
}

}  // namespace

namespace serial {

Matrix affine_rows(const Matrix& weights, std::span<const double> bias, const Matrix& x) {
  Matrix out(x.rows(), weights.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t r = 0; r < weights.rows(); ++r) {
      double s = bias[r];
      for (std::size_t c = 0; c < weights.cols(); ++c) s += weights(r, c) * x(i, c);
      out(i, r) = s;
    }
  }
  return out;
}

std::vector<double> distance_profile(const Matrix& x, std::size_t p) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  std::vector<double> scores(n - 1);
  std::vector<double> left(d), right(d);
  for (std::size_t i = 1; i < n; ++i) {  // position i, 1-based
    const std::size_t lo = i >= p ? i - p + 1 : 1;
    const std::size_t hi = std::min(n, i + p);
    std::fill(left.begin(), left.end(), 0.0);
    std::fill(right.begin(), right.end(), 0.0);
    for (std::size_t r = lo; r <= i; ++r)
      for (std::size_t j = 0; j < d; ++j) left[j] += x(r - 1, j);
    for (std::size_t r = i + 1; r <= hi; ++r)
      for (std::size_t j = 0; j < d; ++j) right[j] += x(r - 1, j);
    const auto nl = static_cast<double>(i - lo + 1);
    const auto nr = static_cast<double>(hi - i);
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = left[j] / nl - right[j] / nr;
      s += diff * diff;
    }
    scores[i - 1] = std::sqrt(s);
  }
  return scores;
}

TripletLossGradient triplet_loss_gradient(const Matrix& weights, std::span<const double> bias,
                                          const Matrix& pool, std::span<const TripletIndex> batch,
                                          double margin) {
  const std::size_t d_out = weights.rows();
  const std::size_t d_in = weights.cols();
  TripletLossGradient g{0.0, 0, Matrix(d_out, d_in), std::vector<double>(bias.size(), 0.0)};
  if (batch.empty()) return g;
  std::vector<double> u(d_in), v(d_in), wu(d_out), wv(d_out);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& t : batch) {
    for (std::size_t c = 0; c < d_in; ++c) {
      u[c] = pool(t.anchor, c) - pool(t.positive, c);
      v[c] = pool(t.anchor, c) - pool(t.negative, c);
    }
    matvec(weights, u, wu);
    matvec(weights, v, wv);
    double d1 = 0.0, d2 = 0.0;
    for (std::size_t r = 0; r < d_out; ++r) {
      d1 += wu[r] * wu[r];
      d2 += wv[r] * wv[r];
    }
    d1 = std::sqrt(d1);
    d2 = std::sqrt(d2);
    const double hinge = d1 - d2 + margin;
    if (hinge <= 0.0) continue;
    g.loss += hinge;
    ++g.active;
    for (std::size_t r = 0; r < d_out; ++r) {
      const double a = d1 > 0.0 ? wu[r] / d1 : 0.0;
      const double b = d2 > 0.0 ? wv[r] / d2 : 0.0;
      for (std::size_t c = 0; c < d_in; ++c) g.grad_weights(r, c) += scale * (a * u[c] - b * v[c]);
    }
  }
  g.loss *= scale;
  return g;
}

}  // namespace serial

namespace omp {

Matrix affine_rows(const Matrix& weights, std::span<const double> bias, const Matrix& x) {
  const std::size_t n = x.rows();
  Matrix out(n, weights.rows());
  const auto rows = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < rows; ++i) {
    const auto xi = x.row(static_cast<std::size_t>(i));
    auto yi = out.row(static_cast<std::size_t>(i));
    for (std::size_t r = 0; r < weights.rows(); ++r) {
      const auto wr = weights.row(r);
      double s = 0.0;
      for (std::size_t c = 0; c < wr.size(); ++c) s += wr[c] * xi[c];
      yi[r] = s + bias[r];
    }
  }
  return out;
}

std::vector<double> distance_profile(const Matrix& x, std::size_t p) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  // Row-major prefix sums: prefix row r holds the sum of rows 1..r.
  std::vector<double> prefix((n + 1) * d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const double* prev = prefix.data() + r * d;
    double* cur = prefix.data() + (r + 1) * d;
    const auto xr = x.row(r);
    for (std::size_t j = 0; j < d; ++j) cur[j] = prev[j] + xr[j];
  }
  std::vector<double> scores(n - 1);
  const auto positions = static_cast<long long>(n - 1);
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < positions; ++ii) {
    const auto i = static_cast<std::size_t>(ii) + 1;
    const std::size_t lo = i >= p ? i - p + 1 : 1;
    const std::size_t hi = std::min(n, i + p);
    const double* a = prefix.data() + (lo - 1) * d;
    const double* m = prefix.data() + i * d;
    const double* b = prefix.data() + hi * d;
    const double inv_l = 1.0 / static_cast<double>(i - lo + 1);
    const double inv_r = 1.0 / static_cast<double>(hi - i);
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = (m[j] - a[j]) * inv_l - (b[j] - m[j]) * inv_r;
      s += diff * diff;
    }
    scores[i - 1] = std::sqrt(s);
  }
  return scores;
}

TripletLossGradient triplet_loss_gradient(const Matrix& weights, std::span<const double> bias,
                                          const Matrix& pool, std::span<const TripletIndex> batch,
                                          double margin) {
  const std::size_t d_out = weights.rows();
  const std::size_t d_in = weights.cols();
  const std::size_t m = batch.size();
  TripletLossGradient g{0.0, 0, Matrix(d_out, d_in), std::vector<double>(bias.size(), 0.0)};
  if (m == 0) return g;

  Matrix u(m, d_in), v(m, d_in), a(m, d_out), b(m, d_out);
  std::vector<double> hinge(m, 0.0);
  const auto count = static_cast<long long>(m);
#pragma omp parallel for schedule(static)
  for (long long tt = 0; tt < count; ++tt) {
    const auto t = static_cast<std::size_t>(tt);
    const auto& tr = batch[t];
    auto ut = u.row(t);
    auto vt = v.row(t);
    for (std::size_t c = 0; c < d_in; ++c) {
      ut[c] = pool(tr.anchor, c) - pool(tr.positive, c);
      vt[c] = pool(tr.anchor, c) - pool(tr.negative, c);
    }
    auto at = a.row(t);
    auto bt = b.row(t);
    matvec(weights, ut, at);
    matvec(weights, vt, bt);
    double d1 = 0.0, d2 = 0.0;
    for (std::size_t r = 0; r < d_out; ++r) {
      d1 += at[r] * at[r];
      d2 += bt[r] * bt[r];
    }
    d1 = std::sqrt(d1);
    d2 = std::sqrt(d2);
    const double h = d1 - d2 + margin;
    if (h <= 0.0) {
      std::fill(at.begin(), at.end(), 0.0);
      std::fill(bt.begin(), bt.end(), 0.0);
      continue;
    }
    hinge[t] = h;
    for (std::size_t r = 0; r < d_out; ++r) {
      at[r] = d1 > 0.0 ? at[r] / d1 : 0.0;
      bt[r] = d2 > 0.0 ? bt[r] / d2 : 0.0;
    }
  }
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t t = 0; t < m; ++t) {
    if (!(hinge[t] <= 0.0)) {
      g.loss += hinge[t];
      ++g.active;
    }
  }
  g.loss *= scale;

  const auto out_rows = static_cast<long long>(d_out);
#pragma omp parallel for schedule(static)
  for (long long rr = 0; rr < out_rows; ++rr) {
    const auto r = static_cast<std::size_t>(rr);
    auto grow = g.grad_weights.row(r);
    for (std::size_t t = 0; t < m; ++t) {
      if (hinge[t] <= 0.0) continue;
      const double at = a(t, r);
      const double bt = b(t, r);
      const auto ut = u.row(t);
      const auto vt = v.row(t);
      for (std::size_t c = 0; c < d_in; ++c) grow[c] += scale * (at * ut[c] - bt * vt[c]);
    }
  }
  return g;
}

}  // namespace omp

}  // namespace seamline::kernels
