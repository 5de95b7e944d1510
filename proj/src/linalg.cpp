#include "sblab/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace sblab {

bool cholesky(Matrix& m) {
  const std::size_t n = m.n;
  double* a = m.a.data();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    const double ljj = std::sqrt(d);
    a[j * n + j] = ljj;
    const double inv = 1.0 / ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s * inv;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
  return true;
}

CholeskyResult cholesky_with_jitter(const Matrix& m, double max_jitter_frac) {
  CholeskyResult res;
  double trace = 0.0;
  for (std::size_t i = 0; i < m.n; ++i) trace += m.at(i, i);
  const double scale = m.n > 0 ? trace / static_cast<double>(m.n) : 0.0;
  double jitter = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    res.factor = m;
    for (std::size_t i = 0; i < m.n; ++i) res.factor.at(i, i) += jitter;
    if (cholesky(res.factor)) {
      res.jitter = jitter;
      res.ok = true;
      return res;
    }
    jitter = (jitter == 0.0) ? 1e-14 * scale : jitter * 10.0;
    if (jitter > max_jitter_frac * scale * (1.0 + 1e-9)) break;
  }
  res.ok = false;
  return res;
}

void lower_matvec(const Matrix& l, std::span<const double> z, std::span<double> y) {
  const std::size_t n = l.n;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    const double* row = l.a.data() + i * n;
    for (std::size_t j = 0; j <= i; ++j) s += row[j] * z[j];
    y[i] = s;
  }
}

void solve_lower(const Matrix& l, std::span<const double> b, std::span<double> x) {
  const std::size_t n = l.n;
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    const double* row = l.a.data() + i * n;
    for (std::size_t j = 0; j < i; ++j) s -= row[j] * x[j];
    x[i] = s / row[i];
  }
}

void solve_lower_transposed(const Matrix& l, std::span<const double> b, std::span<double> x) {
  const std::size_t n = l.n;
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= l.a[j * n + ii] * x[j];
    x[ii] = s / l.a[ii * n + ii];
  }
}

void solve_spd(const Matrix& l, std::span<const double> b, std::span<double> x) {
  std::vector<double> tmp(l.n);
  solve_lower(l, b, tmp);
  solve_lower_transposed(l, tmp, x);
}

void matvec(const Matrix& m, std::span<const double> x, std::span<double> y) {
  const std::size_t n = m.n;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    const double* row = m.a.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) s += row[j] * x[j];
    y[i] = s;
  }
}

bool is_positive_semidefinite(const Matrix& m, double tol_frac) {
  double norm = 0.0;
  for (std::size_t i = 0; i < m.n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m.n; ++j) row += std::abs(m.at(i, j));
    norm = std::max(norm, row);
  }
  Matrix shifted = m;
  const double shift = tol_frac * std::max(norm, 1e-300);
  for (std::size_t i = 0; i < m.n; ++i) shifted.at(i, i) += shift;
  return cholesky(shifted);
}

}  // namespace sblab
