#include "sblab/kernels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "sblab/math_util.hpp"

namespace sblab::kernels {

namespace {

void require_nonnegative_time(double s, double t) {
  if (s < 0.0 || t < 0.0) throw std::domain_error("time must be nonnegative");
}

}  // namespace

double torus_distance(double x, double y) {
  double d = std::fmod(std::abs(x - y), 2.0);
  return std::min(d, 2.0 - d);
}

double heat_kernel_gauss(double r, double a) {
  return std::exp(-a * a / (4.0 * r)) / std::sqrt(4.0 * kPi * r);
}

double heat_kernel_torus(double r, TorusPoint x, TorusPoint y, double tol) {
  if (!(r > 0.0)) throw std::domain_error("heat_kernel_torus: r must be positive");
  if (!(tol > 0.0 && tol <= 1e-6)) throw std::domain_error("heat_kernel_torus: tol in (0, 1e-6]");
  const double delta = torus_distance(x.x, y.x);
  double sum = heat_kernel_gauss(r, delta);
  const double sqrt_r = std::sqrt(r);
  for (std::size_t n = 1; n < 100000; ++n) {
    const double dn = static_cast<double>(2 * n);
    sum += heat_kernel_gauss(r, delta + dn) + heat_kernel_gauss(r, delta - dn);
    // Omitted images lie beyond |a| >= 2n+1 on both sides; bound their total
    // mass by the Gaussian tail (images are spaced 2 apart).
    const double tail = 0.5 * std::erfc((2.0 * static_cast<double>(n) - 1.0) / (2.0 * sqrt_r));
    if (tail < tol) return sum;
  }
  throw std::runtime_error("heat_kernel_torus: image sum failed to converge");
}

double cov_h_free(double s, double t) {
  require_nonnegative_time(s, t);
  return (std::sqrt(s + t) - std::sqrt(std::abs(t - s))) / std::sqrt(4.0 * kPi);
}

double cov_fbm14(double s, double t) {
  require_nonnegative_time(s, t);
  return 0.5 * (std::sqrt(s) + std::sqrt(t) - std::sqrt(std::abs(t - s)));
}

double cov_t_aux(double s, double t, double kappa) {
  require_nonnegative_time(s, t);
  if (!(kappa > 0.0)) throw std::domain_error("cov_t_aux: kappa must be positive");
  return kappa * kappa * std::sqrt(2.0 * kPi) * (std::sqrt(s) + std::sqrt(t) - std::sqrt(s + t));
}

double kappa_spectral() { return 1.0 / std::sqrt(2.0 * kPi); }

double kappa_decomposition() { return 1.0 / std::sqrt(2.0 * std::sqrt(2.0) * kPi); }

double cov_scale_decomposition() { return std::sqrt(kPi); }

double path_scale_decomposition() { return std::pow(kPi, 0.25); }

double cov_bm(double s, double t) {
  require_nonnegative_time(s, t);
  return std::min(s, t);
}

double cov_z_torus(double s, double t, TorusPoint x, TorusPoint y, std::size_t modes) {
  require_nonnegative_time(s, t);
  if (modes < 1) throw std::domain_error("cov_z_torus: modes must be >= 1");
  const double m = std::min(s, t);
  const double tau = std::abs(t - s);
  if (m == 0.0) return 0.0;
  const double delta = x.x - y.x;
  const bool same_point = torus_distance(x.x, y.x) == 0.0;
  double sum = 0.5 * m;
  for (std::size_t k = 1; k <= modes; ++k) {
    const double lk = kPi * kPi * static_cast<double>(k) * static_cast<double>(k);
    const double decay = std::exp(-lk * tau);
    if (decay == 0.0) break;
    const double term = decay * (-std::expm1(-2.0 * lk * m)) / (2.0 * lk);
    sum += same_point ? term : std::cos(kPi * static_cast<double>(k) * delta) * term;
    if (term < 1e-18 * std::abs(sum) && lk * m > 1.0) break;
  }
  return sum;
}

double cov_z_tail_bound(std::size_t modes) {
  return 1.0 / (2.0 * kPi * kPi * static_cast<double>(modes));
}

double canonical_distance_t(double s, double t, double kappa) {
  require_nonnegative_time(s, t);
  // d^2 = cov(s,s) - 2 cov(s,t) + cov(t,t) = kappa^2 sqrt(2 pi) *
  //       (2 sqrt(s+t) - sqrt(2)(sqrt(s) + sqrt(t)))
  const double d2 = kappa * kappa * std::sqrt(2.0 * kPi) *
                    (2.0 * std::sqrt(s + t) - std::sqrt(2.0) * (std::sqrt(s) + std::sqrt(t)));
  return std::sqrt(std::max(0.0, d2));
}

double parabolic_metric(double t, double x, double s, double y) {
  return std::pow(std::abs(t - s), 0.25) + std::sqrt(torus_distance(x, y));
}

double cov_h_window(double s, double t, double t_lo) {
  if (s < t_lo || t < t_lo) throw std::domain_error("cov_h_window: times must be >= t_lo");
  return cov_h_free(s - t_lo, t - t_lo);
}

double cov_h_window_complement(double s, double t, double t_lo) {
  if (s < t_lo || t < t_lo) throw std::domain_error("cov_h_window_complement: times must be >= t_lo");
  return (std::sqrt(s + t) - std::sqrt(s + t - 2.0 * t_lo)) / std::sqrt(4.0 * kPi);
}

double cov_h_window_spacetime(double s, double x, double t, double y, double t_lo) {
  if (s < t_lo || t < t_lo) throw std::domain_error("cov_h_window_spacetime: times must be >= t_lo");
  const double m = std::min(s, t);
  if (m == t_lo) return 0.0;
  const double dx = x - y;
  if (dx == 0.0) return cov_h_free(s - t_lo, t - t_lo);
  // int_{t_lo}^{m} G_{s+t-2r}(dx) dr, substituting u = s+t-2r.
  auto integrand = [&](double u) { return 0.5 * heat_kernel_gauss(u, dx); };
  return integrate(integrand, s + t - 2.0 * m, s + t - 2.0 * t_lo, 1e-13);
}

double cov_i_window_scaled(double u, double v, double u_lo, double wsq) {
  if (u < u_lo || v < u_lo) throw std::domain_error("cov_i_window_scaled: times must be >= u_lo");
  const double m = std::min(u, v);
  if (m <= u_lo) return 0.0;
  const double half_w = 0.5 * std::sqrt(wsq);
  // r = m - w^2 removes the 1/sqrt singularity at r = m when u == v.
  auto integrand = [&](double w) {
    const double r = m - w * w;
    const double denom = u + v - 2.0 * r;
    if (denom <= 1e-300) return 2.0 / std::sqrt(8.0 * kPi);  // w -> 0 limit when u == v
    const double cu = u - r;
    const double cv = v - r;
    double window_factor = 1.0;
    if (cu > 0.0 && cv > 0.0) {
      const double c = cu * cv / denom;
      window_factor = std::erf(half_w / std::sqrt(c));
    }
    return 2.0 * w / std::sqrt(4.0 * kPi * denom) * window_factor;
  };
  return integrate(integrand, 0.0, std::sqrt(m - u_lo), 1e-13);
}

double cross_cov_hz(double t, std::size_t modes) {
  require_nonnegative_time(t, t);
  if (t == 0.0) return 0.0;
  (void)modes;
  // Substituting s = v^2 regularises the 1/sqrt(s) factor exactly:
  // 2v G_{2v^2}(2n) = (2/sqrt(8 pi)) exp(-n^2/(2 v^2)).
  const double front = 2.0 / std::sqrt(8.0 * kPi);
  auto v_integrand = [&](double v) {
    if (v <= 0.0) return front;
    const double root = std::sqrt(2.0) * v;
    double sum = std::erf(1.0 / root);
    for (std::size_t n = 1; n < 64; ++n) {
      const double nd = static_cast<double>(n);
      const double img = std::exp(-nd * nd / (2.0 * v * v));
      if (img < 1e-20) break;
      sum += img * (std::erf((nd + 1.0) / root) - std::erf((nd - 1.0) / root));
    }
    return front * sum;
  };
  return integrate(v_integrand, 0.0, std::sqrt(t), 1e-12);
}

double variance_gap_hz(double t, std::size_t modes) {
  if (t == 0.0) return 0.0;
  (void)modes;
  // Algebraically Var(H-Z) = cov_H - 2 cross + cov_Z, but the gap decays like
  // exp(-1/(2t)) while each term is O(sqrt(t)), so the difference form loses
  // everything to cancellation at small t.  Expanding the cancellation in
  // images gives a sum of nonnegative terms:
  //   gap(t) = int_0^t [ int_T (p_s - G_s)^2 dy + int_{|y|>1} G_s(y)^2 dy ] ds.
  constexpr int kImages = 12;
  auto integrand = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double root = std::sqrt(2.0 * s);
    // boundary leakage of the free-space kernel
    double total = std::erfc(1.0 / root) / std::sqrt(8.0 * kPi * s);
    // squared image sum over the torus: pairs (n, m), both nonzero
    for (int n = -kImages; n <= kImages; ++n) {
      if (n == 0) continue;
      for (int m = -kImages; m <= kImages; ++m) {
        if (m == 0) continue;
        const double cross_g = heat_kernel_gauss(2.0 * s, 2.0 * static_cast<double>(n - m));
        if (cross_g == 0.0) continue;
        const double a = static_cast<double>(n + m);
        const double mass = 0.5 * (std::erf((a + 1.0) / root) - std::erf((a - 1.0) / root));
        total += cross_g * mass;
      }
    }
    return total;
  };
  return std::max(0.0, integrate(integrand, 0.0, t, 1e-15));
}

std::string process_name(ProcessId id) {
  switch (id) {
    case ProcessId::HFree: return "H_free";
    case ProcessId::ZTorus: return "Z_torus";
    case ProcessId::TAux: return "T_aux";
    case ProcessId::Ffbm14: return "F_fbm14";
    case ProcessId::Bm: return "BM";
  }
  return "unknown";
}

CovKernel make_kernel(ProcessId id, double horizon, double kappa, std::size_t modes) {
  CovKernel k;
  k.process = id;
  k.horizon = horizon;
  switch (id) {
    case ProcessId::HFree:
      k.scaling_exponent = 0.5;
      k.eval = [](double s, double t) { return cov_h_free(s, t); };
      break;
    case ProcessId::Ffbm14:
      k.scaling_exponent = 0.5;
      k.eval = [](double s, double t) { return cov_fbm14(s, t); };
      break;
    case ProcessId::TAux: {
      const double kap = kappa > 0.0 ? kappa : kappa_spectral();
      k.scaling_exponent = 0.5;
      k.eval = [kap](double s, double t) { return cov_t_aux(s, t, kap); };
      break;
    }
    case ProcessId::ZTorus:
      k.scaling_exponent = std::numeric_limits<double>::quiet_NaN();
      k.eval = [modes](double s, double t) { return cov_z_torus(s, t, {0.0}, {0.0}, modes); };
      break;
    case ProcessId::Bm:
      k.scaling_exponent = 1.0;
      k.eval = [](double s, double t) { return cov_bm(s, t); };
      break;
  }
  return k;
}

Matrix covariance_matrix(const CovKernel& kernel, const std::vector<double>& times) {
  Matrix m(times.size());
  for (std::size_t i = 0; i < times.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = kernel.eval(times[i], times[j]);
      m.at(i, j) = v;
      m.at(j, i) = v;
    }
  return m;
}

DecompositionFit fit_decomposition(std::size_t grid_n) {
  // cov_fbm14 ~ A * cov_h_free + B * sqrt(2 pi)(sqrt s + sqrt t - sqrt(s+t)):
  // linear least squares in (A, B) with kappa^2 = B/A, c = A.
  double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
  std::vector<double> ts(grid_n);
  for (std::size_t i = 0; i < grid_n; ++i)
    ts[i] = static_cast<double>(i + 1) / static_cast<double>(grid_n);
  for (std::size_t i = 0; i < grid_n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double s = ts[i], t = ts[j];
      const double x1 = cov_h_free(s, t);
      const double x2 = std::sqrt(2.0 * kPi) * (std::sqrt(s) + std::sqrt(t) - std::sqrt(s + t));
      const double y = cov_fbm14(s, t);
      s11 += x1 * x1;
      s12 += x1 * x2;
      s22 += x2 * x2;
      b1 += x1 * y;
      b2 += x2 * y;
    }
  const double det = s11 * s22 - s12 * s12;
  const double a = (s22 * b1 - s12 * b2) / det;
  const double b = (s11 * b2 - s12 * b1) / det;

  DecompositionFit fit;
  fit.cov_scale = a;
  fit.kappa = std::sqrt(b / a);
  fit.path_scale = std::sqrt(a);
  double max_res = 0.0;
  for (std::size_t i = 0; i < grid_n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double s = ts[i], t = ts[j];
      const double pred = a * cov_h_free(s, t) + b * std::sqrt(2.0 * kPi) *
                                                     (std::sqrt(s) + std::sqrt(t) - std::sqrt(s + t));
      max_res = std::max(max_res, std::abs(pred - cov_fbm14(s, t)));
    }
  fit.max_residual = max_res;
  fit.kappa_vs_spectral = fit.kappa / kappa_spectral() - 1.0;
  fit.scale_vs_quarter_root = (1.0 / fit.path_scale) / std::pow(2.0 / kPi, 0.25) - 1.0;
  return fit;
}

}  // namespace sblab::kernels
