#ifndef SBLAB_MATH_UTIL_HPP
#define SBLAB_MATH_UTIL_HPP

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace sblab {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// log_+(a) = log(a v e^e); keeps iterated logarithms positive.
inline double log_plus(double a) {
  const double floor_val = std::exp(std::exp(1.0));
  return std::log(std::max(a, floor_val));
}

// psi(t) = (t / log log_+(1/t))^{1/4}, the Chung normalisation.
inline double chung_psi(double t) {
  return std::pow(t / std::log(log_plus(1.0 / t)), 0.25);
}

// Adaptive Simpson quadrature with absolute tolerance.
double integrate(const std::function<double(double)>& f, double a, double b, double tol);

// Regularised incomplete beta I_x(a,b) and its inverse in x.
double incomplete_beta(double a, double b, double x);
double incomplete_beta_inv(double a, double b, double p);

// Exact (Clopper-Pearson) two-sided binomial interval at confidence 1-alpha.
struct BinomialInterval {
  double lo = 0.0;
  double hi = 1.0;
};
BinomialInterval clopper_pearson(std::size_t successes, std::size_t trials, double alpha = 0.05);

// Upper-tail Student-t quantile, e.g. student_t_quantile(9, 0.975).
double student_t_quantile(std::size_t dof, double p);

// Weighted least squares y ~ slope*x + intercept.  Weights are 1/se^2.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
};
LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& se);

// P{sup_{[0,1]}|B| <= eps} for standard Brownian motion (reflection series).
double bm_smallball_probability(double eps);

}  // namespace sblab

#endif
