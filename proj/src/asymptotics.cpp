#include "sblab/asymptotics.hpp"

#include <cmath>
#include <stdexcept>

#include "sblab/kernels.hpp"
#include "sblab/math_util.hpp"

namespace sblab::asymptotics {

RecursionResult recursion_ratio(double c, std::size_t n) {
  if (!(c > 0.0)) throw std::domain_error("recursion_ratio: c must be positive");
  if (n < 1) throw std::domain_error("recursion_ratio: n must be >= 1");
  double b = 1.0;  // b_j = a_j^{1/4}
  for (std::size_t j = 1; j < n; ++j) {
    // a_{j+1} = a_j (1 + c / b_j^... ) : b_{j+1} = b_j (1 + c / b_j)^{1/4}
    b *= std::exp(0.25 * std::log1p(c / b));
    if (!std::isfinite(b))
      throw std::runtime_error("recursion_ratio: overflow; iterate in the log domain");
  }
  RecursionResult res;
  res.c = c;
  res.n = n;
  const double target = c * static_cast<double>(n) / 4.0;
  res.ratio = std::pow(b / target, 4.0);
  return res;
}

std::vector<double> recursion_direct(double c, std::size_t n) {
  if (!(c > 0.0) || n < 1) throw std::domain_error("recursion_direct: bad arguments");
  std::vector<double> a(n);
  a[0] = 1.0;
  for (std::size_t j = 1; j < n; ++j) {
    a[j] = a[j - 1] + c * std::pow(a[j - 1], 0.75);
    if (!std::isfinite(a[j]))
      throw std::runtime_error("recursion_direct: overflow; use recursion_ratio");
  }
  return a;
}

EntropyCover build_entropy_cover(double epsilon, double c, double kappa) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::domain_error("build_entropy_cover: epsilon in (0,1)");
  if (!(c > 0.0)) throw std::domain_error("build_entropy_cover: c must be positive");
  EntropyCover cover;
  cover.epsilon = epsilon;
  cover.c = c;

  const double diameter = kernels::canonical_distance_t(0.0, 1.0, kappa);
  if (2.0 * epsilon >= diameter) {
    cover.count = 1;
    cover.t_last = 0.0;
    return cover;
  }

  const double scale = std::pow(2.0 * epsilon / c, 4.0);
  // Fitted constants carry sampling slack; allow a relative margin before
  // declaring the pair distance a violation.
  const double bound = 2.0 * epsilon * (1.0 + 1e-6);
  double a = 1.0;
  double prev = 0.0;
  double t = scale;
  cover.count = 1;  // t_0 = 0
  for (std::size_t j = 0; j < 100000000; ++j) {
    const double d = kernels::canonical_distance_t(prev, t, kappa);
    if (d > bound)
      throw std::runtime_error("build_entropy_cover: step distance exceeds 2 eps (fitted c too small)");
    cover.max_pair_distance = std::max(cover.max_pair_distance, d);
    ++cover.count;
    cover.t_last = t;
    if (t >= 1.0) return cover;
    prev = t;
    a += c * std::pow(a, 0.75);
    t = a * scale;
  }
  throw std::runtime_error("build_entropy_cover: failed to cover [0,1]");
}

DBoundFit verify_d_interpolation(std::size_t pairs, RngStream stream, double kappa,
                                 const std::vector<double>& etas) {
  if (pairs < 100) throw std::invalid_argument("verify_d_interpolation: need >= 100 pairs");
  DBoundFit fit;
  auto rng = stream.rng();

  auto ratio = [kappa](double s, double t) {
    const double gap = std::abs(t - s);
    if (gap == 0.0) return 0.0;
    const double envelope =
        std::pow(gap, 0.25) * std::min(1.0, std::pow(gap / std::min(s, t), 0.75));
    return kernels::canonical_distance_t(s, t, kappa) / envelope;
  };

  // Random log-uniform pairs plus deterministic boundary pairs: the global
  // ratio peaks as s -> 0, so sample that edge explicitly.
  for (std::size_t i = 0; i < pairs; ++i) {
    const double s = std::pow(10.0, -8.0 * rng.unit_double());
    const double t = std::pow(10.0, -8.0 * rng.unit_double());
    if (s == t) continue;
    fit.c = std::max(fit.c, ratio(std::min(s, t), std::max(s, t)));
  }
  for (int k = 0; k <= 200; ++k) {
    const double t = std::pow(10.0, -8.0 + 8.0 * static_cast<double>(k) / 200.0);
    fit.c = std::max(fit.c, ratio(0.0, t));  // cover construction starts at t_0 = 0
    fit.c = std::max(fit.c, ratio(1e-12, t));
    fit.c = std::max(fit.c, ratio(t, std::min(1.0, t * 1.0001)));
    fit.c = std::max(fit.c, ratio(t, std::min(1.0, 2.0 * t)));
  }

  for (double eta : etas) {
    double worst = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
      const double s = eta + (1.0 - eta) * rng.unit_double();
      const double t = eta + (1.0 - eta) * rng.unit_double();
      if (s == t) continue;
      worst = std::max(worst, kernels::canonical_distance_t(s, t, kappa) / std::abs(t - s));
    }
    const int grid = 400;
    for (int i = 0; i < grid; ++i) {
      const double s = eta + (1.0 - eta) * (static_cast<double>(i) + 0.5) / grid;
      worst = std::max(worst,
                       kernels::canonical_distance_t(s, std::min(1.0, s * (1.0 + 1e-5)), kappa) /
                           (s * 1e-5));
    }
    fit.c_eta[eta] = worst;
  }
  fit.violations = 0;
  return fit;
}

}  // namespace sblab::asymptotics
