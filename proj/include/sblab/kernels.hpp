#ifndef SBLAB_KERNELS_HPP
#define SBLAB_KERNELS_HPP

#include <cstddef>
#include <functional>
#include <string>

#include "sblab/linalg.hpp"

namespace sblab::kernels {

// Point on the torus [-1,1) ~ R/2Z, additive notation, Haar mass 2.
struct TorusPoint {
  double x = 0.0;
};

// min(|x-y|, 2-|x-y|); symmetric, at most 1.
double torus_distance(double x, double y);

// Free-space Gaussian heat kernel G_r(a) = exp(-a^2/(4r)) / sqrt(4 pi r).
double heat_kernel_gauss(double r, double a);

// Wrapped heat kernel p_r(x,y) = sum_n G_r(x-y+2n), truncated so the omitted
// image tail is provably below tol (Gaussian tail bound on both sides).
double heat_kernel_torus(double r, TorusPoint x, TorusPoint y, double tol = 1e-12);

// E[H(s,0) H(t,0)] = (sqrt(s+t) - sqrt(|t-s|)) / sqrt(4 pi); the closed form of
// the Wiener isometry int_0^{s^t} G_{s+t-2r}(0) dr.  Scales exactly:
// cov(rho s, rho t) = sqrt(rho) cov(s, t).
double cov_h_free(double s, double t);

// E[F(s)F(t)] = (sqrt(s) + sqrt(t) - sqrt(|t-s|)) / 2 for the fractional
// Brownian motion with E|F(t)-F(s)|^2 = |t-s|^{1/2}.
double cov_fbm14(double s, double t);

// E[T(s)T(t)] = kappa^2 sqrt(2 pi) (sqrt(s) + sqrt(t) - sqrt(s+t)), via
// int_0^inf (1-e^{-a z^2})(1-e^{-b z^2}) z^{-2} dz = sqrt(pi)(sqrt(a)+sqrt(b)-sqrt(a+b)).
double cov_t_aux(double s, double t, double kappa);

// Spectral prefactor 1/sqrt(2 pi) of the auxiliary process as defined.
double kappa_spectral();
// Prefactor (2 sqrt(2) pi)^{-1/2} for which the three-kernel identity
// c * (cov_h_free + cov_t_aux) = cov_fbm14 holds exactly, with c = sqrt(pi).
double kappa_decomposition();
double cov_scale_decomposition();  // sqrt(pi)
// Path-level scale: F = path_scale * (H + T), i.e. pi^{1/4}.
double path_scale_decomposition();

// Brownian motion, for calibration runs.
double cov_bm(double s, double t);

// E[Z(s,x) Z(t,y)] by the Fourier-mode series on the torus, truncated at
// `modes`.  The omitted tail is below sum_{k>modes} 1/(2 pi^2 k^2) <=
// 1/(2 pi^2 modes).
double cov_z_torus(double s, double t, TorusPoint x, TorusPoint y, std::size_t modes = 4096);
double cov_z_tail_bound(std::size_t modes);

// Canonical distance d(s,t) = ||T(t) - T(s)||_2.
double canonical_distance_t(double s, double t, double kappa);

// Parabolic space-time metric |t-s|^{1/4} + dist(x,y)^{1/2}; quasi-metric with
// triangle constant 2^{3/4}.
double parabolic_metric(double t, double x, double s, double y);

// --- windowed kernels -------------------------------------------------------
// Noise restricted to the time window [t_lo, t): at a fixed spatial point the
// covariance is cov_h_free shifted by t_lo.
double cov_h_window(double s, double t, double t_lo);
// Complementary piece from noise in (0, t_lo); independent of the window part.
double cov_h_window_complement(double s, double t, double t_lo);
// Space-time covariance of the window field at two spatial points.
double cov_h_window_spacetime(double s, double x, double t, double y, double t_lo);

// Time-and-space window: noise restricted to [u_lo, u) x {|y-x| <= w}, in
// rescaled time u = t / t_hi with half-width parameter wsq = w^2 / t_hi.
// Computed by quadrature; the process value scales as t_hi^{1/4}.
double cov_i_window_scaled(double u, double v, double u_lo, double wsq);

// --- gap between free-space and torus solutions -----------------------------
// E[H(t,0) Z(t,0)] with the same driving noise on the torus (image expansion).
double cross_cov_hz(double t, std::size_t modes = 4096);
// Var(H(t,0) - Z(t,0)); bounded by 5t.
double variance_gap_hz(double t, std::size_t modes = 4096);

// --- named kernel handles ----------------------------------------------------
enum class ProcessId { HFree, ZTorus, TAux, Ffbm14, Bm };

std::string process_name(ProcessId id);

// A pure covariance with metadata.  For ZTorus, eval fixes x = y = 0.
struct CovKernel {
  ProcessId process;
  double horizon = 1.0;
  double scaling_exponent = 0.5;  // cov(rho s, rho t) = rho^e cov(s,t); NaN if none
  std::function<double(double, double)> eval;
};

CovKernel make_kernel(ProcessId id, double horizon = 1.0, double kappa = 0.0,
                      std::size_t modes = 4096);

// Fill m(i,j) = eval(t_i, t_j) over the given times.
Matrix covariance_matrix(const CovKernel& kernel, const std::vector<double>& times);

// --- decomposition fit -------------------------------------------------------
// Least-squares fit of (c, kappa) in c*(cov_h_free + cov_t_aux(kappa)) =
// cov_fbm14 on an n-point grid; linear in (c, c*kappa^2).
struct DecompositionFit {
  double kappa = 0.0;
  double cov_scale = 0.0;    // c in the identity above
  double path_scale = 0.0;   // sqrt(c): F = path_scale * (H + T)
  double max_residual = 0.0;
  double kappa_vs_spectral = 0.0;      // kappa / (1/sqrt(2 pi)) - 1
  double scale_vs_quarter_root = 0.0;  // path_scale / (2/pi)^{-1/4}-style reference, see report
};
DecompositionFit fit_decomposition(std::size_t grid_n = 64);

}  // namespace sblab::kernels

#endif
