#ifndef SBLAB_SAMPLERS_HPP
#define SBLAB_SAMPLERS_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "sblab/fft.hpp"
#include "sblab/kernels.hpp"
#include "sblab/linalg.hpp"
#include "sblab/rng.hpp"

namespace sblab::samplers {

// Uniform time grid t_i = t_start + i*dt.  Processes started at zero use
// t_start = 0; localized window fields use a shifted start.
struct TimeGrid {
  std::size_t n = 2;
  double t_start = 0.0;
  double t_end = 1.0;

  double dt() const { return (t_end - t_start) / static_cast<double>(n - 1); }
  double point(std::size_t i) const { return t_start + dt() * static_cast<double>(i); }
  std::vector<double> points() const {
    std::vector<double> ts(n);
    for (std::size_t i = 0; i < n; ++i) ts[i] = point(i);
    return ts;
  }
  bool operator==(const TimeGrid&) const = default;
};

struct PathEnsemble {
  TimeGrid grid;
  kernels::ProcessId process = kernels::ProcessId::Bm;
  std::size_t count = 0;
  std::vector<double> values;  // count x grid.n, row-major
  RngStream provenance;        // path i was drawn from provenance.child(i)

  std::span<double> path(std::size_t i) { return {values.data() + i * grid.n, grid.n}; }
  std::span<const double> path(std::size_t i) const {
    return {values.data() + i * grid.n, grid.n};
  }
};

// --- fractional Brownian motion, index 1/4, by circulant embedding ----------
// Exact in law on the grid: the stationary increment sequence is embedded in a
// circulant matrix whose eigenvalues come from one FFT.  Each path costs one
// FFT of the embedding size.  The embedding is checked nonnegative definite
// and the constructor fails loudly otherwise.
class CirculantFbm {
 public:
  explicit CirculantFbm(const TimeGrid& grid);

  std::size_t noise_dim() const { return m_; }
  double min_eigenvalue_ratio() const { return min_eig_ratio_; }

  // Deterministic map from iid N(0,1) noise to one path (path[0] = 0).
  void map(std::span<const double> z, std::span<double> path) const;

 private:
  TimeGrid grid_;
  std::size_t m_ = 0;
  FftPlan plan_;
  std::vector<double> amp_;  // sqrt(eig_j / m)
  double min_eig_ratio_ = 0.0;
};

PathEnsemble sample_fbm14(const TimeGrid& grid, std::size_t count, RngStream stream);

// --- generic dense-factorization sampler -------------------------------------
// Symmetric factorization of the covariance matrix with reported diagonal
// jitter; grid points with zero variance are pinned to zero.
class GaussianPathSampler {
 public:
  GaussianPathSampler(const kernels::CovKernel& kernel, const TimeGrid& grid);
  GaussianPathSampler(std::function<double(double, double)> cov, const TimeGrid& grid,
                      kernels::ProcessId tag);

  std::size_t noise_dim() const { return active_.size(); }
  double jitter_used() const { return jitter_; }
  const TimeGrid& grid() const { return grid_; }

  void map(std::span<const double> z, std::span<double> path) const;

 private:
  void factor(const std::function<double(double, double)>& cov);

  TimeGrid grid_;
  kernels::ProcessId tag_;
  std::vector<std::size_t> active_;
  Matrix chol_;
  double jitter_ = 0.0;
};

PathEnsemble sample_gaussian_path(const kernels::CovKernel& kernel, const TimeGrid& grid,
                                  std::size_t count, RngStream stream,
                                  double* jitter_used = nullptr);

// --- heat equation on the torus, spectral form -------------------------------
// Each Fourier mode evolves as an Ornstein-Uhlenbeck process with its exact
// one-step transition; mode zero is Brownian with variance t/2 in the field.
struct SpaceTimeEnsemble {
  TimeGrid tgrid;
  std::vector<double> x_points;
  std::size_t count = 0;
  std::vector<double> values;  // count x (n * nx), time-major per path
  RngStream provenance;
  double truncation_tail = 0.0;

  std::span<const double> field(std::size_t path) const {
    const std::size_t sz = tgrid.n * x_points.size();
    return {values.data() + path * sz, sz};
  }
  double at(std::size_t path, std::size_t ti, std::size_t xi) const {
    return values[path * tgrid.n * x_points.size() + ti * x_points.size() + xi];
  }
};

class ZTorusSampler {
 public:
  ZTorusSampler(const TimeGrid& tgrid, std::size_t xgrid, std::size_t modes);

  std::size_t noise_dim() const { return (tgrid_.n - 1) * (2 * modes_ + 1); }
  double truncation_tail() const;
  const std::vector<double>& x_points() const { return xs_; }

  // z -> field values (time-major, tgrid.n * xgrid entries).
  void map(std::span<const double> z, std::span<double> out) const;

 private:
  TimeGrid tgrid_;
  std::size_t modes_;
  std::vector<double> xs_;
  std::vector<double> decay_;    // exp(-pi^2 k^2 dt)
  std::vector<double> step_sd_;  // sqrt((1 - decay^2) / (2 pi^2 k^2))
  std::vector<double> cos_table_, sin_table_;
};

SpaceTimeEnsemble sample_z_torus(const TimeGrid& tgrid, std::size_t xgrid, std::size_t modes,
                                 std::size_t count, RngStream stream);

// --- coupled construction of H from F and T ----------------------------------
// Realises H = F/path_scale - T with the joint law implied by the fitted
// decomposition: the independent T input provides the innovations of the
// conditional law of T given F, so the output covariance is exactly cov_h_free.
PathEnsemble coupled_h_from_f_t(const PathEnsemble& f_paths, const PathEnsemble& t_paths,
                                double path_scale, double kappa);

// --- localized window fields --------------------------------------------------
enum class LocalField { HWindow, IWindow };

struct LocalizedEnsemble {
  std::vector<double> times;     // within [t_{n+1}, t_n]
  std::vector<double> x_points;
  std::size_t count = 0;
  std::vector<double> values;  // count x (nt * nx), time-major
  double t_lo = 0.0, t_hi = 0.0;
  double window_halfwidth = 0.0;  // sqrt(t_n |log t_n|), IWindow only

  double at(std::size_t path, std::size_t ti, std::size_t xi) const {
    return values[path * times.size() * x_points.size() + ti * x_points.size() + xi];
  }
};

// t_n = exp(-n^{1+alpha}).  Throws std::domain_error when t_n would underflow,
// directing the caller to a smaller n.
double window_time(std::size_t n, double alpha);

LocalizedEnsemble sample_localized(LocalField field, std::size_t n, double alpha,
                                   std::size_t time_points, const std::vector<double>& x_points,
                                   std::size_t count, RngStream stream);

// --- free-space solution at a fixed point on arbitrary grids -------------------
// H(t, 0) has the spectral form (1/sqrt(pi)) int_0^inf A_xi(t) W(d xi) with
// independent rate-xi^2 Ornstein-Uhlenbeck coordinates, so it can be sampled
// exactly-in-law (up to the frequency quadrature) on any increasing time grid,
// including log-spaced grids spanning many decades.
class HSpectralSampler {
 public:
  explicit HSpectralSampler(std::vector<double> times, std::size_t modes_per_decade = 32,
                            double pad_lo = 1e-4, double pad_hi = 100.0);

  std::size_t noise_dim() const { return times_.size() * weights_.size(); }
  std::size_t modes() const { return weights_.size(); }
  const std::vector<double>& times() const { return times_; }
  // Max relative error of the quadrature variance against the closed form.
  double max_variance_rel_error() const { return var_rel_error_; }

  void map(std::span<const double> z, std::span<double> out) const;

 private:
  std::vector<double> times_;
  std::vector<double> weights_;  // sqrt(dxi / pi)
  std::vector<double> decay_, step_sd_;  // (step, mode) tables
  double var_rel_error_ = 0.0;
};

// count x times matrix of paths, row-major.
std::vector<double> sample_h_spectral(const HSpectralSampler& sampler, std::size_t count,
                                      RngStream stream);

// --- empirical covariance accumulation ---------------------------------------
struct CovAccumulator {
  std::size_t n = 0;
  std::size_t count = 0;
  std::vector<double> sum;  // n x n accumulated outer products

  explicit CovAccumulator(std::size_t n_) : n(n_), sum(n_ * n_, 0.0) {}
  void add(std::span<const double> path);
  void merge(const CovAccumulator& other);
  Matrix covariance() const;
  // Max |Chat_ij - C_ij| / se_ij with se from the Gaussian fourth-moment rule.
  double max_z(const Matrix& target) const;
};

}  // namespace sblab::samplers

#endif
