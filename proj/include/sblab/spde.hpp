#ifndef SBLAB_SPDE_HPP
#define SBLAB_SPDE_HPP

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "sblab/rng.hpp"

namespace sblab::spde {

enum class Scheme { Explicit, SemiImplicit };

std::string scheme_name(Scheme s);

// du = u_xx dt + sigma(u) dW on the torus [-1,1), m cells of width h = 2/m.
struct SpdeConfig {
  std::size_t m = 256;  // even, >= 4
  double dt = 0.0;
  double horizon = 0.1;
  std::function<double(double)> sigma;
  std::function<double(double)> u0;
  Scheme scheme = Scheme::SemiImplicit;

  double h() const { return 2.0 / static_cast<double>(m); }
  std::size_t steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }
  double x_point(std::size_t j) const { return -1.0 + h() * static_cast<double>(j); }
  void validate() const;
};

// Cell-averaged space-time white noise: entries iid N(0, dt/h).
struct NoiseArray {
  std::size_t steps = 0;
  std::size_t m = 0;
  double dt = 0.0;
  std::vector<double> values;  // steps x m
  RngStream provenance;

  double at(std::size_t k, std::size_t j) const { return values[k * m + j]; }
};

NoiseArray make_noise(const SpdeConfig& config, RngStream stream);

struct Field {
  std::size_t m = 0;
  std::size_t steps = 0;
  double dt = 0.0;
  Scheme scheme = Scheme::SemiImplicit;
  std::vector<double> values;  // (steps+1) x m
  RngStream noise_provenance;

  double at(std::size_t k, std::size_t j) const { return values[k * m + j]; }
  std::size_t time_index(double t) const { return static_cast<std::size_t>(std::llround(t / dt)); }
};

// One periodic heat step applied after adding the noise term:
//   u^{k+1} = A(u^k + sigma(u^k) W^k),
// A explicit (CFL dt <= h^2/2 enforced) or semi-implicit (unconditional).
Field solve_u(const SpdeConfig& config, const NoiseArray& noise);

// The sigma = 1, u0 = 0 solve under the identical noise and scheme.
Field solve_z_coupled(const SpdeConfig& config, const NoiseArray& noise);

// Deterministic discrete heat semigroup applied to u0 (no noise).
Field heat_semigroup(const SpdeConfig& config);

// E(t,x) = u(t,x) - (semigroup u0)(t,x) - sigma(u0(x)) Z(t,x), with the
// semigroup taken from the same discrete operator so constant-sigma inputs
// cancel exactly.
struct ErrorField {
  std::size_t m = 0;
  std::size_t steps = 0;
  double dt = 0.0;
  std::vector<double> values;

  double at(std::size_t k, std::size_t j) const { return values[k * m + j]; }
  double max_abs_up_to(std::size_t step) const;
};

ErrorField linearization_error(const Field& u, const Field& z, const SpdeConfig& config);

// Per-t quantiles of sup|E| / (sqrt(t) log_+(1/t)) and the tail slope of the
// pointwise statistic |E(t,x)|/sqrt(t).
struct ErrorRateRow {
  double t = 0.0;
  double median_ratio = 0.0;
  double q90_ratio = 0.0;
  double max_ratio = 0.0;
  double tail_slope = 0.0;  // slope of log-survival of |E(t,x0)|/sqrt(t)
};

std::vector<ErrorRateRow> error_rate_study(const SpdeConfig& config,
                                           const std::vector<double>& t_list,
                                           std::size_t replicas, RngStream stream,
                                           std::size_t threads = 1);

// Clamp wrapper sigma_N; off by default everywhere.
std::function<double(double)> make_truncated_sigma(std::function<double(double)> sigma, double level);

}  // namespace sblab::spde

#endif
