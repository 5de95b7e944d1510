#include "sblab/math_util.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace sblab {

namespace {

double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a, double fa, double b,
                     double fb, double m, double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, fa, m, fm, flm);
  const double right = simpson(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

// Continued fraction for the incomplete beta (Lentz's method).
double beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 3e-16) break;
  }
  return h;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = simpson(a, fa, b, fb, fm);
  return adaptive_step(f, a, fa, b, fb, m, fm, whole, tol, 48);
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double incomplete_beta_inv(double a, double b, double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  double x = a / (a + b);
  for (int it = 0; it < 200; ++it) {
    const double v = incomplete_beta(a, b, x);
    if (v > p)
      hi = x;
    else
      lo = x;
    x = 0.5 * (lo + hi);
    if (hi - lo < 1e-15) break;
  }
  return x;
}

BinomialInterval clopper_pearson(std::size_t k, std::size_t n, double alpha) {
  if (n == 0) throw std::invalid_argument("clopper_pearson: n must be positive");
  BinomialInterval ci;
  const double kk = static_cast<double>(k);
  const double nn = static_cast<double>(n);
  ci.lo = (k == 0) ? 0.0 : incomplete_beta_inv(kk, nn - kk + 1.0, 0.5 * alpha);
  ci.hi = (k == n) ? 1.0 : incomplete_beta_inv(kk + 1.0, nn - kk, 1.0 - 0.5 * alpha);
  return ci;
}

double student_t_quantile(std::size_t dof, double p) {
  if (dof == 0) throw std::invalid_argument("student_t_quantile: dof must be positive");
  if (!(p > 0.5 && p < 1.0)) throw std::invalid_argument("student_t_quantile: p in (0.5,1)");
  const double nu = static_cast<double>(dof);
  auto cdf = [nu](double t) {
    const double x = nu / (nu + t * t);
    return 1.0 - 0.5 * incomplete_beta(0.5 * nu, 0.5, x);
  };
  double lo = 0.0, hi = 1e4;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& se) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n || se.size() != n)
    throw std::invalid_argument("weighted_linear_fit: need >= 2 points with matching sizes");
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = se[i] > 0 ? se[i] : 1e-12;
    const double w = 1.0 / (s * s);
    sw += w;
    swx += w * x[i];
    swy += w * y[i];
    swxx += w * x[i] * x[i];
    swxy += w * x[i] * y[i];
  }
  const double det = sw * swxx - swx * swx;
  if (std::abs(det) < 1e-300) throw std::runtime_error("weighted_linear_fit: singular design");
  LinearFit fit;
  fit.slope = (sw * swxy - swx * swy) / det;
  fit.intercept = (swxx * swy - swx * swxy) / det;
  fit.slope_se = std::sqrt(sw / det);
  fit.intercept_se = std::sqrt(swxx / det);
  return fit;
}

double bm_smallball_probability(double eps) {
  if (eps <= 0.0) return 0.0;
  double sum = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double odd = 2.0 * k + 1.0;
    const double term = std::pow(-1.0, k) / odd * std::exp(-odd * odd * kPi * kPi / (8.0 * eps * eps));
    sum += term;
    if (std::abs(term) < 1e-18 * std::max(std::abs(sum), 1e-300)) break;
  }
  return std::min(1.0, std::max(0.0, 4.0 / kPi * sum));
}

}  // namespace sblab
