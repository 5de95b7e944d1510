#ifndef SBLAB_LINALG_HPP
#define SBLAB_LINALG_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace sblab {

// Dense row-major square matrix, sized for covariance work (n up to a few
// thousand).
struct Matrix {
  std::size_t n = 0;
  std::vector<double> a;

  Matrix() = default;
  explicit Matrix(std::size_t n_) : n(n_), a(n_ * n_, 0.0) {}
  double& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

// In-place lower Cholesky; returns false if the matrix is not (numerically)
// positive definite.
bool cholesky(Matrix& m);

struct CholeskyResult {
  Matrix factor;        // lower triangular
  double jitter = 0.0;  // diagonal shift that was needed, 0 when clean
  bool ok = false;
};

// Cholesky with escalating diagonal jitter, capped at max_jitter_frac *
// trace/n. The jitter actually used is reported, never hidden.
CholeskyResult cholesky_with_jitter(const Matrix& m, double max_jitter_frac = 1e-12);

// y = L * z for lower-triangular L.
void lower_matvec(const Matrix& l, std::span<const double> z, std::span<double> y);

// Solve L x = b (forward) and L^T x = b (backward) for lower-triangular L.
void solve_lower(const Matrix& l, std::span<const double> b, std::span<double> x);
void solve_lower_transposed(const Matrix& l, std::span<const double> b, std::span<double> x);

// Solve (L L^T) x = b given the Cholesky factor.
void solve_spd(const Matrix& l, std::span<const double> b, std::span<double> x);

// General dense product y = A x.
void matvec(const Matrix& m, std::span<const double> x, std::span<double> y);

// PSD check at the standard tolerance: succeeds iff the smallest eigenvalue
// is >= -tol_frac * max|diag-scale|. Implemented as Cholesky of M + shift*I.
bool is_positive_semidefinite(const Matrix& m, double tol_frac = 1e-10);

}  // namespace sblab

#endif
