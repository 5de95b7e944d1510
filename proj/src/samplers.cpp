#include "sblab/samplers.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "sblab/math_util.hpp"

namespace sblab::samplers {

namespace {

std::size_t next_pow2(std::size_t v) {
  std::size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

// Autocovariance of the increment sequence of F on a uniform grid
// (fractional Gaussian noise, Hurst 1/4): r(k) scales with dt^{1/2}.
double fgn_autocov(std::size_t k, double dt) {
  const double kk = static_cast<double>(k);
  const double scale = std::sqrt(dt);
  if (k == 0) return scale;
  return 0.5 * scale * (std::sqrt(kk + 1.0) - 2.0 * std::sqrt(kk) + std::sqrt(kk - 1.0));
}

}  // namespace

// --- CirculantFbm -------------------------------------------------------------

CirculantFbm::CirculantFbm(const TimeGrid& grid)
    : grid_(grid), m_(next_pow2(2 * (grid.n - 1))), plan_(next_pow2(2 * (grid.n - 1))) {
  if (grid.n < 2) throw std::invalid_argument("CirculantFbm: grid needs >= 2 points");
  if (grid.t_start != 0.0) throw std::invalid_argument("CirculantFbm: grid must start at 0");
  const double dt = grid.dt();
  std::vector<std::complex<double>> c(m_);
  for (std::size_t j = 0; j <= m_ / 2; ++j) c[j] = fgn_autocov(j, dt);
  for (std::size_t j = m_ / 2 + 1; j < m_; ++j) c[j] = c[m_ - j];
  plan_.forward(c.data());
  double max_eig = 0.0, min_eig = 0.0;
  for (const auto& e : c) {
    max_eig = std::max(max_eig, e.real());
    min_eig = std::min(min_eig, e.real());
  }
  min_eig_ratio_ = min_eig / max_eig;
  if (min_eig < -1e-9 * max_eig)
    throw std::runtime_error("CirculantFbm: embedding not PSD");
  amp_.resize(m_);
  for (std::size_t j = 0; j < m_; ++j)
    amp_[j] = std::sqrt(std::max(0.0, c[j].real()) / static_cast<double>(m_));
}

void CirculantFbm::map(std::span<const double> z, std::span<double> path) const {
  if (z.size() != m_ || path.size() != grid_.n)
    throw std::invalid_argument("CirculantFbm::map: bad buffer sizes");
  // Hermitian-symmetric spectral noise: one FFT yields one real sample of the
  // embedded stationary sequence from m iid normals.
  thread_local std::vector<std::complex<double>> w;
  w.resize(m_);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  w[0] = amp_[0] * z[0];
  w[m_ / 2] = amp_[m_ / 2] * z[m_ / 2];
  for (std::size_t j = 1; j < m_ / 2; ++j) {
    const std::complex<double> g(z[j] * inv_sqrt2, z[m_ - j] * inv_sqrt2);
    w[j] = amp_[j] * g;
    w[m_ - j] = amp_[m_ - j] * std::conj(g);
  }
  plan_.forward(w.data());
  path[0] = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < grid_.n; ++i) {
    acc += w[i].real();
    path[i + 1] = acc;
  }
}

PathEnsemble sample_fbm14(const TimeGrid& grid, std::size_t count, RngStream stream) {
  CirculantFbm embed(grid);
  PathEnsemble ens;
  ens.grid = grid;
  ens.process = kernels::ProcessId::Ffbm14;
  ens.count = count;
  ens.provenance = stream;
  ens.values.resize(count * grid.n);
  std::vector<double> z(embed.noise_dim());
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = stream.child(i).rng();
    rng.fill_normal(z);
    embed.map(z, ens.path(i));
  }
  return ens;
}

// --- GaussianPathSampler -------------------------------------------------------

GaussianPathSampler::GaussianPathSampler(const kernels::CovKernel& kernel, const TimeGrid& grid)
    : grid_(grid), tag_(kernel.process) {
  factor(kernel.eval);
}

GaussianPathSampler::GaussianPathSampler(std::function<double(double, double)> cov,
                                         const TimeGrid& grid, kernels::ProcessId tag)
    : grid_(grid), tag_(tag) {
  factor(cov);
}

void GaussianPathSampler::factor(const std::function<double(double, double)>& cov) {
  if (grid_.n > 4096)
    throw std::invalid_argument("GaussianPathSampler: dense factorization limited to n <= 4096");
  const auto ts = grid_.points();
  active_.clear();
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (cov(ts[i], ts[i]) > 1e-300) active_.push_back(i);
  Matrix cm(active_.size());
  for (std::size_t a = 0; a < active_.size(); ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      const double v = cov(ts[active_[a]], ts[active_[b]]);
      cm.at(a, b) = v;
      cm.at(b, a) = v;
    }
  auto res = cholesky_with_jitter(cm, 1e-12);
  if (!res.ok) throw std::runtime_error("kernel not PSD on grid");
  chol_ = std::move(res.factor);
  jitter_ = res.jitter;
}

void GaussianPathSampler::map(std::span<const double> z, std::span<double> path) const {
  if (z.size() != active_.size() || path.size() != grid_.n)
    throw std::invalid_argument("GaussianPathSampler::map: bad buffer sizes");
  thread_local std::vector<double> y;
  y.resize(active_.size());
  lower_matvec(chol_, z, y);
  for (double& v : path) v = 0.0;
  for (std::size_t a = 0; a < active_.size(); ++a) path[active_[a]] = y[a];
}

PathEnsemble sample_gaussian_path(const kernels::CovKernel& kernel, const TimeGrid& grid,
                                  std::size_t count, RngStream stream, double* jitter_used) {
  GaussianPathSampler sampler(kernel, grid);
  if (jitter_used) *jitter_used = sampler.jitter_used();
  PathEnsemble ens;
  ens.grid = grid;
  ens.process = kernel.process;
  ens.count = count;
  ens.provenance = stream;
  ens.values.resize(count * grid.n);
  std::vector<double> z(sampler.noise_dim());
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = stream.child(i).rng();
    rng.fill_normal(z);
    sampler.map(z, ens.path(i));
  }
  return ens;
}

// --- ZTorusSampler --------------------------------------------------------------

ZTorusSampler::ZTorusSampler(const TimeGrid& tgrid, std::size_t xgrid, std::size_t modes)
    : tgrid_(tgrid), modes_(modes) {
  if (tgrid.t_start != 0.0) throw std::invalid_argument("ZTorusSampler: grid must start at 0");
  if (xgrid == 0) throw std::invalid_argument("ZTorusSampler: xgrid must be positive");
  if (2 * modes < xgrid)
    throw std::invalid_argument("ZTorusSampler: modes too small for requested xgrid");
  if (xgrid == 1) {
    xs_ = {0.0};
  } else {
    xs_.resize(xgrid);
    for (std::size_t j = 0; j < xgrid; ++j)
      xs_[j] = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(xgrid);
  }
  const double dt = tgrid.dt();
  decay_.resize(modes + 1);
  step_sd_.resize(modes + 1);
  decay_[0] = 1.0;
  step_sd_[0] = std::sqrt(dt);
  for (std::size_t k = 1; k <= modes; ++k) {
    const double lk = kPi * kPi * static_cast<double>(k) * static_cast<double>(k);
    decay_[k] = std::exp(-lk * dt);
    step_sd_[k] = std::sqrt(-std::expm1(-2.0 * lk * dt) / (2.0 * lk));
  }
  cos_table_.resize(modes * xs_.size());
  sin_table_.resize(modes * xs_.size());
  for (std::size_t k = 1; k <= modes; ++k)
    for (std::size_t j = 0; j < xs_.size(); ++j) {
      const double arg = kPi * static_cast<double>(k) * xs_[j];
      cos_table_[(k - 1) * xs_.size() + j] = std::cos(arg);
      sin_table_[(k - 1) * xs_.size() + j] = std::sin(arg);
    }
}

double ZTorusSampler::truncation_tail() const { return kernels::cov_z_tail_bound(modes_); }

void ZTorusSampler::map(std::span<const double> z, std::span<double> out) const {
  const std::size_t nx = xs_.size();
  const std::size_t nt = tgrid_.n;
  if (z.size() != noise_dim() || out.size() != nt * nx)
    throw std::invalid_argument("ZTorusSampler::map: bad buffer sizes");
  std::vector<double> a(modes_ + 1, 0.0);  // cosine amplitudes; a[0] is the flat mode
  std::vector<double> b(modes_ + 1, 0.0);
  for (std::size_t j = 0; j < nx; ++j) out[j] = 0.0;
  std::size_t zi = 0;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (std::size_t i = 1; i < nt; ++i) {
    a[0] += step_sd_[0] * z[zi++];
    for (std::size_t k = 1; k <= modes_; ++k) {
      a[k] = decay_[k] * a[k] + step_sd_[k] * z[zi++];
      b[k] = decay_[k] * b[k] + step_sd_[k] * z[zi++];
    }
    double* row = out.data() + i * nx;
    for (std::size_t j = 0; j < nx; ++j) row[j] = inv_sqrt2 * a[0];
    for (std::size_t k = 1; k <= modes_; ++k) {
      const double* ck = cos_table_.data() + (k - 1) * nx;
      const double* sk = sin_table_.data() + (k - 1) * nx;
      const double ak = a[k], bk = b[k];
      for (std::size_t j = 0; j < nx; ++j) row[j] += ak * ck[j] + bk * sk[j];
    }
  }
}

SpaceTimeEnsemble sample_z_torus(const TimeGrid& tgrid, std::size_t xgrid, std::size_t modes,
                                 std::size_t count, RngStream stream) {
  ZTorusSampler sampler(tgrid, xgrid, modes);
  SpaceTimeEnsemble ens;
  ens.tgrid = tgrid;
  ens.x_points = sampler.x_points();
  ens.count = count;
  ens.provenance = stream;
  ens.truncation_tail = sampler.truncation_tail();
  const std::size_t sz = tgrid.n * ens.x_points.size();
  ens.values.resize(count * sz);
  std::vector<double> z(sampler.noise_dim());
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = stream.child(i).rng();
    rng.fill_normal(z);
    sampler.map(z, {ens.values.data() + i * sz, sz});
  }
  return ens;
}

// --- coupled H ---------------------------------------------------------------

PathEnsemble coupled_h_from_f_t(const PathEnsemble& f_paths, const PathEnsemble& t_paths,
                                double path_scale, double kappa) {
  if (!(f_paths.grid == t_paths.grid)) throw std::invalid_argument("coupled_h_from_f_t: grid mismatch");
  if (f_paths.count != t_paths.count)
    throw std::invalid_argument("coupled_h_from_f_t: ensemble sizes differ");
  if (f_paths.provenance.seed == t_paths.provenance.seed &&
      f_paths.provenance.stream_id == t_paths.provenance.stream_id)
    throw std::invalid_argument("coupled_h_from_f_t: F and T must come from distinct streams");

  const TimeGrid& grid = f_paths.grid;
  const auto ts = grid.points();
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (ts[i] > 0.0) active.push_back(i);
  const std::size_t na = active.size();

  Matrix cov_t(na), cov_s(na);
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      const double s = ts[active[a]], t = ts[active[b]];
      const double ct = kernels::cov_t_aux(s, t, kappa);
      const double cs = kernels::cov_h_free(s, t) + ct;
      cov_t.at(a, b) = cov_t.at(b, a) = ct;
      cov_s.at(a, b) = cov_s.at(b, a) = cs;
    }

  auto chol_t = cholesky_with_jitter(cov_t);
  auto chol_s = cholesky_with_jitter(cov_s);
  if (!chol_t.ok || !chol_s.ok) throw std::runtime_error("coupled_h_from_f_t: kernel not PSD on grid");

  // X = S^{-1} C (column by column), then conditional covariance C - C X.
  Matrix x(na);
  std::vector<double> col(na), sol(na);
  for (std::size_t j = 0; j < na; ++j) {
    for (std::size_t i = 0; i < na; ++i) col[i] = cov_t.at(i, j);
    solve_spd(chol_s.factor, col, sol);
    for (std::size_t i = 0; i < na; ++i) x.at(i, j) = sol[i];
  }
  Matrix cond(na);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < na; ++j) {
      double acc = cov_t.at(i, j);
      for (std::size_t k = 0; k < na; ++k) acc -= cov_t.at(i, k) * x.at(k, j);
      cond.at(i, j) = acc;
    }
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = i + 1; j < na; ++j) {
      const double sym = 0.5 * (cond.at(i, j) + cond.at(j, i));
      cond.at(i, j) = cond.at(j, i) = sym;
    }
  auto chol_c = cholesky_with_jitter(cond, 1e-9);
  if (!chol_c.ok) throw std::runtime_error("coupled_h_from_f_t: conditional covariance not PSD");

  PathEnsemble out;
  out.grid = grid;
  out.process = kernels::ProcessId::HFree;
  out.count = f_paths.count;
  out.provenance = f_paths.provenance;
  out.values.assign(out.count * grid.n, 0.0);

  std::vector<double> fprime(na), xi(na), tin(na), mean(na), innov(na);
  for (std::size_t p = 0; p < out.count; ++p) {
    const auto f = f_paths.path(p);
    const auto traw = t_paths.path(p);
    for (std::size_t a = 0; a < na; ++a) {
      fprime[a] = f[active[a]] / path_scale;
      tin[a] = traw[active[a]];
    }
    // Whiten the independent T draw; it supplies the conditional innovations.
    solve_lower(chol_t.factor, tin, xi);
    solve_spd(chol_s.factor, fprime, sol);
    matvec(cov_t, sol, mean);
    lower_matvec(chol_c.factor, xi, innov);
    auto h = out.path(p);
    for (std::size_t a = 0; a < na; ++a) h[active[a]] = fprime[a] - (mean[a] + innov[a]);
  }
  return out;
}

// --- localized fields ----------------------------------------------------------

double window_time(std::size_t n, double alpha) {
  if (n < 1) throw std::domain_error("window_time: n must be >= 1");
  const double expo = std::pow(static_cast<double>(n), 1.0 + alpha);
  if (expo > 700.0)
    throw std::domain_error("window_time: t_n underflows in double precision; use smaller n");
  return std::exp(-expo);
}

LocalizedEnsemble sample_localized(LocalField field, std::size_t n, double alpha,
                                   std::size_t time_points, const std::vector<double>& x_points,
                                   std::size_t count, RngStream stream) {
  if (time_points < 2) throw std::invalid_argument("sample_localized: need >= 2 time points");
  if (x_points.empty()) throw std::invalid_argument("sample_localized: need >= 1 x point");
  const double t_hi = window_time(n, alpha);
  const double t_lo = window_time(n + 1, alpha);

  LocalizedEnsemble ens;
  ens.t_lo = t_lo;
  ens.t_hi = t_hi;
  ens.x_points = x_points;
  ens.count = count;
  ens.times.resize(time_points);
  for (std::size_t i = 0; i < time_points; ++i)
    ens.times[i] = t_lo + (t_hi - t_lo) * static_cast<double>(i) / static_cast<double>(time_points - 1);

  const std::size_t nt = time_points;
  const std::size_t nx = x_points.size();
  ens.values.assign(count * nt * nx, 0.0);
  const double amplitude = std::pow(t_hi, 0.25);
  const double u_lo = t_lo / t_hi;
  std::vector<double> us(nt);
  for (std::size_t i = 0; i < nt; ++i) us[i] = ens.times[i] / t_hi;

  if (field == LocalField::HWindow) {
    // Full space-time factorization in rescaled coordinates (time / t_n,
    // space / sqrt(t_n)); values scale back with t_n^{1/4}.
    const double sqrt_thi = std::sqrt(t_hi);
    const std::size_t dim = nt * nx;
    if (dim > 4096) throw std::invalid_argument("sample_localized: window grid too large");
    Matrix cm(dim);
    for (std::size_t p = 0; p < dim; ++p) {
      const std::size_t ti = p / nx, xi = p % nx;
      for (std::size_t q = 0; q <= p; ++q) {
        const std::size_t tj = q / nx, xj = q % nx;
        const double v = kernels::cov_h_window_spacetime(us[ti], x_points[xi] / sqrt_thi, us[tj],
                                                         x_points[xj] / sqrt_thi, u_lo);
        cm.at(p, q) = cm.at(q, p) = v;
      }
    }
    auto chol = cholesky_with_jitter(cm, 1e-9);
    if (!chol.ok) throw std::runtime_error("sample_localized: window kernel not PSD");
    std::vector<double> z(dim), y(dim);
    for (std::size_t p = 0; p < count; ++p) {
      auto rng = stream.child(p).rng();
      rng.fill_normal(z);
      lower_matvec(chol.factor, z, y);
      for (std::size_t q = 0; q < dim; ++q) ens.values[p * dim + q] = amplitude * y[q];
    }
    return ens;
  }

  // IWindow: disjoint noise windows make separated sites exactly independent,
  // so each site gets its own stream and its own draw.
  const double log_factor = std::pow(static_cast<double>(n), 1.0 + alpha);  // |log t_n|
  ens.window_halfwidth = std::sqrt(t_hi * log_factor);
  for (std::size_t a = 0; a < nx; ++a)
    for (std::size_t b = a + 1; b < nx; ++b)
      if (std::abs(x_points[a] - x_points[b]) < 2.0 * ens.window_halfwidth)
        throw std::invalid_argument(
            "sample_localized: x points closer than twice the window half-width");
  Matrix cm(nt);
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = kernels::cov_i_window_scaled(us[i], us[j], u_lo, log_factor);
      cm.at(i, j) = cm.at(j, i) = v;
    }
  auto chol = cholesky_with_jitter(cm, 1e-9);
  if (!chol.ok) throw std::runtime_error("sample_localized: window kernel not PSD");
  std::vector<double> z(nt), y(nt);
  for (std::size_t p = 0; p < count; ++p)
    for (std::size_t a = 0; a < nx; ++a) {
      auto rng = stream.child(p, a).rng();
      rng.fill_normal(z);
      lower_matvec(chol.factor, z, y);
      for (std::size_t i = 0; i < nt; ++i) ens.values[(p * nt + i) * nx + a] = amplitude * y[i];
    }
  return ens;
}

// --- spectral sampler for H(., 0) -------------------------------------------------

HSpectralSampler::HSpectralSampler(std::vector<double> times, std::size_t modes_per_decade,
                                   double pad_lo, double pad_hi)
    : times_(std::move(times)) {
  if (times_.empty()) throw std::invalid_argument("HSpectralSampler: empty grid");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!(times_[i] > 0.0) || (i > 0 && times_[i] <= times_[i - 1]))
      throw std::invalid_argument("HSpectralSampler: times must be positive and increasing");
  }
  const double xi_min = pad_lo / std::sqrt(times_.back());
  const double xi_max = pad_hi / std::sqrt(times_.front());
  const double decades = std::log10(xi_max / xi_min);
  const std::size_t modes =
      std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(decades * modes_per_decade)));
  const double dl = std::log(xi_max / xi_min) / static_cast<double>(modes);
  std::vector<double> xi(modes);
  weights_.resize(modes);
  for (std::size_t k = 0; k < modes; ++k) {
    xi[k] = xi_min * std::exp((static_cast<double>(k) + 0.5) * dl);
    weights_[k] = std::sqrt(xi[k] * dl / kPi);
  }
  const std::size_t steps = times_.size();
  decay_.resize(steps * modes);
  step_sd_.resize(steps * modes);
  for (std::size_t s = 0; s < steps; ++s) {
    const double dt = s == 0 ? times_[0] : times_[s] - times_[s - 1];
    for (std::size_t k = 0; k < modes; ++k) {
      const double rate = xi[k] * xi[k];
      decay_[s * modes + k] = std::exp(-rate * dt);
      step_sd_[s * modes + k] = std::sqrt(-std::expm1(-2.0 * rate * dt) / (2.0 * rate));
    }
  }
  for (std::size_t s = 0; s < steps; ++s) {
    double var_quad = 0.0;
    for (std::size_t k = 0; k < modes; ++k) {
      const double rate = xi[k] * xi[k];
      var_quad += weights_[k] * weights_[k] * (-std::expm1(-2.0 * rate * times_[s])) / (2.0 * rate);
    }
    const double var_exact = kernels::cov_h_free(times_[s], times_[s]);
    var_rel_error_ = std::max(var_rel_error_, std::abs(var_quad - var_exact) / var_exact);
  }
}

void HSpectralSampler::map(std::span<const double> z, std::span<double> out) const {
  const std::size_t steps = times_.size();
  const std::size_t modes = weights_.size();
  if (z.size() != steps * modes || out.size() != steps)
    throw std::invalid_argument("HSpectralSampler::map: bad buffer sizes");
  std::vector<double> state(modes, 0.0);
  for (std::size_t s = 0; s < steps; ++s) {
    const double* dk = decay_.data() + s * modes;
    const double* sk = step_sd_.data() + s * modes;
    const double* zk = z.data() + s * modes;
    double acc = 0.0;
    for (std::size_t k = 0; k < modes; ++k) {
      state[k] = dk[k] * state[k] + sk[k] * zk[k];
      acc += weights_[k] * state[k];
    }
    out[s] = acc;
  }
}

std::vector<double> sample_h_spectral(const HSpectralSampler& sampler, std::size_t count,
                                      RngStream stream) {
  const std::size_t nt = sampler.times().size();
  std::vector<double> values(count * nt);
  std::vector<double> z(sampler.noise_dim());
  for (std::size_t p = 0; p < count; ++p) {
    auto rng = stream.child(p).rng();
    rng.fill_normal(z);
    sampler.map(z, {values.data() + p * nt, nt});
  }
  return values;
}

// --- covariance accumulation -----------------------------------------------------

void CovAccumulator::add(std::span<const double> path) {
  if (path.size() != n) throw std::invalid_argument("CovAccumulator::add: size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = path[i];
    double* row = sum.data() + i * n;
    for (std::size_t j = 0; j <= i; ++j) row[j] += xi * path[j];
  }
  ++count;
}

void CovAccumulator::merge(const CovAccumulator& other) {
  if (other.n != n) throw std::invalid_argument("CovAccumulator::merge: size mismatch");
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += other.sum[i];
  count += other.count;
}

Matrix CovAccumulator::covariance() const {
  Matrix m(n);
  const double inv = count > 0 ? 1.0 / static_cast<double>(count) : 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = sum[i * n + j] * inv;
      m.at(i, j) = v;
      m.at(j, i) = v;
    }
  return m;
}

double CovAccumulator::max_z(const Matrix& target) const {
  if (target.n != n) throw std::invalid_argument("CovAccumulator::max_z: size mismatch");
  const Matrix emp = covariance();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double se2 =
          (target.at(i, i) * target.at(j, j) + target.at(i, j) * target.at(i, j)) /
          static_cast<double>(count);
      if (se2 <= 0.0) continue;
      const double z = std::abs(emp.at(i, j) - target.at(i, j)) / std::sqrt(se2);
      worst = std::max(worst, z);
    }
  return worst;
}

}  // namespace sblab::samplers
