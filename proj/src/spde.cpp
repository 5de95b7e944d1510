#include "sblab/spde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sblab/math_util.hpp"
#include "sblab/threading.hpp"

namespace sblab::spde {

std::string scheme_name(Scheme s) {
  return s == Scheme::Explicit ? "explicit" : "semi_implicit";
}

void SpdeConfig::validate() const {
  if (m < 4 || m % 2 != 0) throw std::invalid_argument("SpdeConfig: m must be even and >= 4");
  if (!(dt > 0.0)) throw std::invalid_argument("SpdeConfig: dt must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("SpdeConfig: horizon must be positive");
  if (!sigma || !u0) throw std::invalid_argument("SpdeConfig: sigma and u0 must be set");
  if (scheme == Scheme::Explicit && dt > 0.5 * h() * h() * (1.0 + 1e-12))
    throw std::invalid_argument("SpdeConfig: explicit scheme needs dt <= h^2/2 (CFL)");
}

NoiseArray make_noise(const SpdeConfig& config, RngStream stream) {
  config.validate();
  NoiseArray noise;
  noise.steps = config.steps();
  noise.m = config.m;
  noise.dt = config.dt;
  noise.provenance = stream;
  noise.values.resize(noise.steps * noise.m);
  const double sd = std::sqrt(config.dt / config.h());
  auto rng = stream.rng();
  for (double& v : noise.values) v = sd * rng.normal();
  return noise;
}

namespace {

// Periodic tridiagonal solve for (I - c*Lap_h) via cyclic Thomas reduction.
// The matrix is fixed per configuration, so the forward coefficients and the
// rank-one correction are precomputed once.
class CyclicHeatSolver {
 public:
  CyclicHeatSolver(std::size_t m, double c) : m_(m), off_(-c) {
    const double diag = 1.0 + 2.0 * c;
    gamma_ = -diag;
    diag_mod_.assign(m, diag);
    diag_mod_[0] = diag - gamma_;
    diag_mod_[m - 1] = diag - off_ * off_ / gamma_;
    cp_.resize(m);
    cp_[0] = off_ / diag_mod_[0];
    denom_.resize(m);
    denom_[0] = diag_mod_[0];
    for (std::size_t i = 1; i < m; ++i) {
      denom_[i] = diag_mod_[i] - off_ * cp_[i - 1];
      cp_[i] = off_ / denom_[i];
    }
    std::vector<double> u(m, 0.0);
    u[0] = gamma_;
    u[m - 1] = off_;
    z_.resize(m);
    tridiag(u, z_);
    corr_ = 1.0 + z_[0] + off_ * z_[m - 1] / gamma_;
  }

  void solve(const std::vector<double>& rhs, std::vector<double>& out) const {
    tridiag(rhs, out);
    const double fact = (out[0] + off_ * out[m_ - 1] / gamma_) / corr_;
    for (std::size_t i = 0; i < m_; ++i) out[i] -= fact * z_[i];
  }

 private:
  void tridiag(const std::vector<double>& rhs, std::vector<double>& x) const {
    scratch_.resize(m_);
    scratch_[0] = rhs[0] / denom_[0];
    for (std::size_t i = 1; i < m_; ++i)
      scratch_[i] = (rhs[i] - off_ * scratch_[i - 1]) / denom_[i];
    x[m_ - 1] = scratch_[m_ - 1];
    for (std::size_t i = m_ - 1; i-- > 0;) x[i] = scratch_[i] - cp_[i] * x[i + 1];
  }

  std::size_t m_;
  double off_;
  double gamma_;
  double corr_ = 1.0;
  std::vector<double> diag_mod_, cp_, denom_, z_;
  mutable std::vector<double> scratch_;
};

Field integrate_field(const SpdeConfig& config, const NoiseArray* noise,
                      const std::function<double(double)>& sigma,
                      const std::function<double(double)>& u0) {
  config.validate();
  const std::size_t m = config.m;
  const std::size_t steps = config.steps();
  if (noise && (noise->steps != steps || noise->m != m))
    throw std::invalid_argument("solve: noise array shape does not match config");

  Field field;
  field.m = m;
  field.steps = steps;
  field.dt = config.dt;
  field.scheme = config.scheme;
  if (noise) field.noise_provenance = noise->provenance;
  field.values.resize((steps + 1) * m);

  std::vector<double> cur(m), nxt(m), work(m);
  for (std::size_t j = 0; j < m; ++j) cur[j] = u0(config.x_point(j));
  std::copy(cur.begin(), cur.end(), field.values.begin());

  const double c = config.dt / (config.h() * config.h());
  CyclicHeatSolver implicit_solver(m, c);

  for (std::size_t k = 0; k < steps; ++k) {
    if (noise) {
      const double* w = noise->values.data() + k * m;
      for (std::size_t j = 0; j < m; ++j) work[j] = cur[j] + sigma(cur[j]) * w[j];
    } else {
      std::copy(cur.begin(), cur.end(), work.begin());
    }
    if (config.scheme == Scheme::Explicit) {
      for (std::size_t j = 0; j < m; ++j) {
        const double left = work[(j + m - 1) % m];
        const double right = work[(j + 1) % m];
        nxt[j] = work[j] + c * (left - 2.0 * work[j] + right);
      }
    } else {
      implicit_solver.solve(work, nxt);
    }
    for (std::size_t j = 0; j < m; ++j)
      if (!std::isfinite(nxt[j]))
        throw std::runtime_error("solve: non-finite value at step " + std::to_string(k + 1));
    std::copy(nxt.begin(), nxt.end(), field.values.begin() + (k + 1) * m);
    cur.swap(nxt);
  }
  return field;
}

}  // namespace

Field solve_u(const SpdeConfig& config, const NoiseArray& noise) {
  return integrate_field(config, &noise, config.sigma, config.u0);
}

Field solve_z_coupled(const SpdeConfig& config, const NoiseArray& noise) {
  auto one = [](double) { return 1.0; };
  auto zero = [](double) { return 0.0; };
  return integrate_field(config, &noise, one, zero);
}

Field heat_semigroup(const SpdeConfig& config) {
  return integrate_field(config, nullptr, config.sigma, config.u0);
}

double ErrorField::max_abs_up_to(std::size_t step) const {
  double worst = 0.0;
  const std::size_t upto = std::min(step, steps);
  for (std::size_t k = 0; k <= upto; ++k)
    for (std::size_t j = 0; j < m; ++j) worst = std::max(worst, std::abs(at(k, j)));
  return worst;
}

ErrorField linearization_error(const Field& u, const Field& z, const SpdeConfig& config) {
  if (u.m != z.m || u.steps != z.steps || u.dt != z.dt || u.scheme != z.scheme)
    throw std::invalid_argument("linearization_error: field shapes differ");
  if (u.noise_provenance.seed != z.noise_provenance.seed ||
      u.noise_provenance.stream_id != z.noise_provenance.stream_id)
    throw std::invalid_argument("linearization_error: fields driven by different noise streams");
  const Field semi = heat_semigroup(config);
  ErrorField err;
  err.m = u.m;
  err.steps = u.steps;
  err.dt = u.dt;
  err.values.resize((u.steps + 1) * u.m);
  std::vector<double> sig0(u.m);
  for (std::size_t j = 0; j < u.m; ++j) sig0[j] = config.sigma(config.u0(config.x_point(j)));
  for (std::size_t k = 0; k <= u.steps; ++k)
    for (std::size_t j = 0; j < u.m; ++j)
      err.values[k * u.m + j] = u.at(k, j) - semi.at(k, j) - sig0[j] * z.at(k, j);
  return err;
}

std::vector<ErrorRateRow> error_rate_study(const SpdeConfig& config,
                                           const std::vector<double>& t_list,
                                           std::size_t replicas, RngStream stream,
                                           std::size_t threads) {
  if (replicas < 2) throw std::invalid_argument("error_rate_study: need >= 2 replicas");
  for (double t : t_list)
    if (!(t > 0.0 && t <= config.horizon))
      throw std::invalid_argument("error_rate_study: t values must lie in (0, horizon]");

  const std::size_t nt = t_list.size();
  std::vector<double> sup_ratio(replicas * nt);
  std::vector<double> point_abs(replicas * nt);

  parallel_for(replicas, threads, [&](std::size_t r) {
    const NoiseArray noise = make_noise(config, stream.child(r));
    const Field u = solve_u(config, noise);
    const Field z = solve_z_coupled(config, noise);
    const ErrorField err = linearization_error(u, z, config);
    for (std::size_t ti = 0; ti < nt; ++ti) {
      const double t = t_list[ti];
      const std::size_t step = err.steps < u.time_index(t) ? err.steps : u.time_index(t);
      const double norm = std::sqrt(t) * log_plus(1.0 / t);
      sup_ratio[r * nt + ti] = err.max_abs_up_to(step) / norm;
      point_abs[r * nt + ti] = std::abs(err.at(step, 0)) / std::sqrt(t);
    }
  });

  std::vector<ErrorRateRow> rows(nt);
  for (std::size_t ti = 0; ti < nt; ++ti) {
    std::vector<double> sup_vals(replicas), pt_vals(replicas);
    for (std::size_t r = 0; r < replicas; ++r) {
      sup_vals[r] = sup_ratio[r * nt + ti];
      pt_vals[r] = point_abs[r * nt + ti];
    }
    std::sort(sup_vals.begin(), sup_vals.end());
    std::sort(pt_vals.begin(), pt_vals.end());
    ErrorRateRow row;
    row.t = t_list[ti];
    row.median_ratio = sup_vals[replicas / 2];
    row.q90_ratio = sup_vals[(replicas * 9) / 10];
    row.max_ratio = sup_vals.back();
    // Log-survival slope of the pointwise statistic across its upper half.
    std::vector<double> xs, ys, se;
    for (std::size_t q = replicas / 2; q + 2 < replicas; ++q) {
      const double surv = static_cast<double>(replicas - q) / static_cast<double>(replicas);
      xs.push_back(pt_vals[q]);
      ys.push_back(std::log(surv));
      se.push_back(1.0);
    }
    row.tail_slope = xs.size() >= 2 ? weighted_linear_fit(xs, ys, se).slope : 0.0;
    rows[ti] = row;
  }
  return rows;
}

std::function<double(double)> make_truncated_sigma(std::function<double(double)> sigma,
                                                   double level) {
  return [sigma = std::move(sigma), level](double v) {
    return sigma(std::clamp(v, -level, level));
  };
}

}  // namespace sblab::spde
