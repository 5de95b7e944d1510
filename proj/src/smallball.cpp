#include "sblab/smallball.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sblab/kernels.hpp"
#include "sblab/math_util.hpp"
#include "sblab/threading.hpp"

namespace sblab::smallball {

namespace {

constexpr double kZ95 = 1.959963984540054;

std::vector<std::size_t> window_indices(const samplers::TimeGrid& grid, double lo, double hi) {
  std::vector<std::size_t> idx;
  const double slack = 1e-12 * std::max(1.0, std::abs(hi));
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double t = grid.point(i);
    if (t >= lo - slack && t <= hi + slack) idx.push_back(i);
  }
  if (idx.empty()) throw std::invalid_argument("score window contains no grid points");
  return idx;
}

double sup_abs_over(std::span<const double> path, const std::vector<std::size_t>& idx) {
  double worst = 0.0;
  for (std::size_t i : idx) worst = std::max(worst, std::abs(path[i]));
  return worst;
}

}  // namespace

double se_log(const EstimateRecord& rec) {
  if (!(rec.ci_lo > 0.0) || !(rec.ci_hi > 0.0)) return std::numeric_limits<double>::infinity();
  return (std::log(rec.ci_hi) - std::log(rec.ci_lo)) / (2.0 * kZ95);
}

EstimateRecord estimate_plain(const ScoreModel& model, double epsilon, std::size_t n,
                              RngStream stream, std::size_t threads) {
  if (n < 1) throw std::invalid_argument("estimate_plain: n must be >= 1");
  const std::size_t blocks = std::min<std::size_t>(std::max<std::size_t>(threads, 1) * 8, n);
  std::vector<std::size_t> hits(blocks, 0);
  parallel_for(blocks, threads, [&](std::size_t b) {
    std::vector<double> z(model.dim);
    std::size_t local = 0;
    for (std::size_t i = b; i < n; i += blocks) {
      auto rng = stream.child(i).rng();
      rng.fill_normal(z);
      if (model.score(z) <= epsilon) ++local;
    }
    hits[b] = local;
  });
  const std::size_t k = std::accumulate(hits.begin(), hits.end(), std::size_t{0});
  EstimateRecord rec;
  rec.method = "plain";
  rec.n_effective = n;
  rec.cost = n;
  rec.p_hat = static_cast<double>(k) / static_cast<double>(n);
  rec.log_p = rec.p_hat > 0.0 ? std::log(rec.p_hat) : -std::numeric_limits<double>::infinity();
  const auto ci = clopper_pearson(k, n);
  rec.ci_lo = ci.lo;
  rec.ci_hi = ci.hi;
  return rec;
}

namespace {

struct SplitRun {
  double p = 0.0;
  std::uint64_t cost = 0;
};

SplitRun run_one_splitting(const ScoreModel& model, double epsilon, const SplittingConfig& cfg,
                           RngStream rep_stream) {
  const std::size_t n = cfg.particles;
  const std::size_t kill = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.kill_fraction * n));
  std::vector<std::vector<double>> state(n, std::vector<double>(model.dim));
  std::vector<double> scores(n);
  SplitRun out;

  for (std::size_t i = 0; i < n; ++i) {
    auto rng = rep_stream.child(0, i).rng();
    rng.fill_normal(state[i]);
    scores[i] = model.score(state[i]);
    ++out.cost;
  }

  double beta = cfg.pcn_beta;       // global autoregressive step
  double beta_block = 1.0;          // step inside the refreshed block
  double rate_global = 0.5, rate_block = 0.5;
  std::size_t block = std::max<std::size_t>(1, model.dim / 8);
  double log_p = 0.0;
  std::vector<std::size_t> order(n);
  std::vector<double> proposal(model.dim);

  for (std::size_t stage = 1; stage <= cfg.max_stages; ++stage) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a < b;
    });
    const double level = scores[order[kill - 1]];
    if (scores[order[0]] == scores[order[n - 1]])
      throw std::runtime_error(
          "estimate_splitting: particle degeneracy (all scores tied); "
          "increase pcn_beta or particles");

    if (level <= epsilon) {
      std::size_t hits = 0;
      for (double s : scores)
        if (s <= epsilon) ++hits;
      if (hits == 0) return {0.0, out.cost};
      out.p = std::exp(log_p) * static_cast<double>(hits) / static_cast<double>(n);
      return out;
    }

    // Exactly the k worst particles are killed (ties broken by index), so the
    // stage fraction is fixed and quantile ties cannot cascade into overkill.
    std::vector<std::size_t> killed(order.begin(), order.begin() + kill);
    std::vector<std::size_t> survivors(order.begin() + kill, order.end());
    log_p += std::log(static_cast<double>(n - kill) / static_cast<double>(n));

    RngStream stage_stream = rep_stream.child(stage);
    auto pick_rng = stage_stream.child(0).rng();
    for (std::size_t j = 0; j < killed.size(); ++j) {
      const std::size_t src = survivors[pick_rng.next_u64() % survivors.size()];
      state[killed[j]] = state[src];
      scores[killed[j]] = scores[src];
    }
    // Every particle is rejuvenated, clones and survivors alike; stale
    // survivors would otherwise bias the stage fractions downward.  Each
    // sweep composes two reversible autoregressive moves on the iid Gaussian
    // state: the global step with adaptive beta, and the same move restricted
    // to a random coordinate block with its own adaptive (size, step) pair.
    // The block kernel keeps renewing the population in regimes where any
    // global step is rejected.
    const bool do_global = !(beta <= 1.2e-4 && rate_global < 0.02);
    std::size_t global_accepts = 0, global_proposals = 0;
    std::size_t block_accepts = 0, block_proposals = 0;
    const double keep = std::sqrt(1.0 - beta * beta);
    const double keep_block = std::sqrt(1.0 - beta_block * beta_block);
    for (std::size_t slot = 0; slot < n; ++slot) {
      auto move_rng = stage_stream.child(1, slot).rng();
      for (std::size_t sweep = 0; sweep < cfg.rejuvenation_sweeps; ++sweep) {
        auto& z = state[slot];
        if (do_global) {
          for (std::size_t d = 0; d < model.dim; ++d)
            proposal[d] = keep * z[d] + beta * move_rng.normal();
          const double s = model.score(proposal);
          ++out.cost;
          ++global_proposals;
          if (s < level) {
            z.swap(proposal);
            scores[slot] = s;
            ++global_accepts;
          }
        }
        {
          std::copy(z.begin(), z.end(), proposal.begin());
          const std::size_t offset =
              model.dim > block ? move_rng.next_u64() % (model.dim - block + 1) : 0;
          for (std::size_t d = offset; d < offset + block && d < model.dim; ++d)
            proposal[d] = keep_block * z[d] + beta_block * move_rng.normal();
          const double s = model.score(proposal);
          ++out.cost;
          ++block_proposals;
          if (s < level) {
            z.swap(proposal);
            scores[slot] = s;
            ++block_accepts;
          }
        }
      }
    }
    if (cfg.adapt_beta && global_proposals > 0) {
      rate_global = static_cast<double>(global_accepts) / static_cast<double>(global_proposals);
      if (rate_global < 0.2)
        beta = std::max(1e-4, beta * 0.85);
      else if (rate_global > 0.6)
        beta = std::min(1.0, beta * 1.2);
    }
    if (block_proposals > 0) {
      rate_block = static_cast<double>(block_accepts) / static_cast<double>(block_proposals);
      if (rate_block < 0.2) {
        if (block > 1)
          block = std::max<std::size_t>(1, block / 2);
        else
          beta_block = std::max(1e-3, beta_block * 0.7);
      } else if (rate_block > 0.6) {
        if (beta_block < 1.0)
          beta_block = std::min(1.0, beta_block * 1.4);
        else
          block = std::min(model.dim, block + block / 2 + 1);
      }
    }
  }
  throw std::runtime_error("estimate_splitting: level did not reach epsilon within max_stages");
}

}  // namespace

EstimateRecord estimate_splitting(const ScoreModel& model, double epsilon,
                                  const SplittingConfig& cfg, RngStream stream,
                                  std::size_t threads) {
  if (cfg.particles < 100) throw std::invalid_argument("SplittingConfig: particles >= 100");
  if (!(cfg.kill_fraction > 0.0 && cfg.kill_fraction < 1.0))
    throw std::invalid_argument("SplittingConfig: kill_fraction in (0,1)");
  if (static_cast<std::size_t>(cfg.kill_fraction * cfg.particles) < 1)
    throw std::invalid_argument("SplittingConfig: kill_fraction * particles >= 1");
  if (!(cfg.pcn_beta > 0.0 && cfg.pcn_beta <= 1.0))
    throw std::invalid_argument("SplittingConfig: pcn_beta in (0,1]");
  if (cfg.repetitions < 2) throw std::invalid_argument("SplittingConfig: repetitions >= 2");

  std::vector<SplitRun> runs(cfg.repetitions);
  parallel_for(cfg.repetitions, threads, [&](std::size_t r) {
    runs[r] = run_one_splitting(model, epsilon, cfg, stream.child(0xA5, r));
  });

  EstimateRecord rec;
  rec.method = "splitting";
  rec.n_effective = cfg.repetitions * cfg.particles;
  double mean_p = 0.0;
  std::vector<double> logs;
  for (const auto& run : runs) {
    rec.cost += run.cost;
    mean_p += run.p;
    if (run.p > 0.0) logs.push_back(std::log(run.p));
  }
  mean_p /= static_cast<double>(cfg.repetitions);
  rec.p_hat = mean_p;
  rec.log_p = mean_p > 0.0 ? std::log(mean_p) : -std::numeric_limits<double>::infinity();
  if (logs.size() >= 2 && mean_p > 0.0) {
    double mu = 0.0;
    for (double v : logs) mu += v;
    mu /= static_cast<double>(logs.size());
    double var = 0.0;
    for (double v : logs) var += (v - mu) * (v - mu);
    var /= static_cast<double>(logs.size() - 1);
    const double t = student_t_quantile(logs.size() - 1, 0.975);
    const double delta = t * std::sqrt(var / static_cast<double>(logs.size()));
    rec.ci_lo = mean_p * std::exp(-delta);
    rec.ci_hi = mean_p * std::exp(delta);
  } else {
    rec.ci_lo = 0.0;
    rec.ci_hi = mean_p > 0.0 ? std::min(1.0, mean_p * 100.0) : 1.0;
  }
  return rec;
}

// --- score-model builders ------------------------------------------------------

ScoreModel make_bm_score(const samplers::TimeGrid& grid, double window_lo, double window_hi) {
  if (grid.t_start != 0.0) throw std::invalid_argument("make_bm_score: grid must start at 0");
  auto idx = window_indices(grid, window_lo, window_hi);
  const double sd = std::sqrt(grid.dt());
  const std::size_t n = grid.n;
  ScoreModel model;
  model.dim = n - 1;
  model.score = [idx = std::move(idx), sd, n](std::span<const double> z) {
    thread_local std::vector<double> path;
    path.resize(n);
    path[0] = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      acc += sd * z[i];
      path[i + 1] = acc;
    }
    return sup_abs_over(path, idx);
  };
  return model;
}

ScoreModel make_fbm_score(const samplers::TimeGrid& grid, double window_lo, double window_hi) {
  auto embed = std::make_shared<samplers::CirculantFbm>(grid);
  auto idx = window_indices(grid, window_lo, window_hi);
  const std::size_t n = grid.n;
  ScoreModel model;
  model.dim = embed->noise_dim();
  model.score = [embed, idx = std::move(idx), n](std::span<const double> z) {
    thread_local std::vector<double> path;
    path.resize(n);
    embed->map(z, path);
    return sup_abs_over(path, idx);
  };
  return model;
}

ScoreModel make_cov_score(std::function<double(double, double)> cov,
                          const samplers::TimeGrid& grid, double window_lo, double window_hi) {
  auto sampler = std::make_shared<samplers::GaussianPathSampler>(std::move(cov), grid,
                                                                 kernels::ProcessId::HFree);
  auto idx = window_indices(grid, window_lo, window_hi);
  const std::size_t n = grid.n;
  ScoreModel model;
  model.dim = sampler->noise_dim();
  model.score = [sampler, idx = std::move(idx), n](std::span<const double> z) {
    thread_local std::vector<double> path;
    path.resize(n);
    sampler->map(z, path);
    return sup_abs_over(path, idx);
  };
  return model;
}

ScoreModel make_z0_score(const samplers::TimeGrid& grid, std::size_t modes) {
  auto sampler = std::make_shared<samplers::ZTorusSampler>(grid, 1, modes);
  const std::size_t n = grid.n;
  ScoreModel model;
  model.dim = sampler->noise_dim();
  model.score = [sampler, n](std::span<const double> z) {
    thread_local std::vector<double> field;
    field.resize(n);
    sampler->map(z, field);
    double worst = 0.0;
    for (double v : field) worst = std::max(worst, std::abs(v));
    return worst;
  };
  return model;
}

ScoreModel make_spde_score(const spde::SpdeConfig& config, std::size_t x_index,
                           bool center_at_u0) {
  config.validate();
  if (x_index >= config.m) throw std::invalid_argument("make_spde_score: x_index out of range");
  auto cfg = std::make_shared<spde::SpdeConfig>(config);
  const std::size_t steps = config.steps();
  const std::size_t m = config.m;
  const double noise_sd = std::sqrt(config.dt / config.h());
  const double center = center_at_u0 ? config.u0(config.x_point(x_index)) : 0.0;
  ScoreModel model;
  model.dim = steps * m;
  model.score = [cfg, steps, m, noise_sd, x_index, center](std::span<const double> z) {
    spde::NoiseArray noise;
    noise.steps = steps;
    noise.m = m;
    noise.dt = cfg->dt;
    noise.values.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) noise.values[i] = noise_sd * z[i];
    const spde::Field u = spde::solve_u(*cfg, noise);
    double worst = 0.0;
    for (std::size_t k = 0; k <= steps; ++k)
      worst = std::max(worst, std::abs(u.at(k, x_index) - center));
    return worst;
  };
  return model;
}

// --- fits ------------------------------------------------------------------------

FitPoint fit_point(double epsilon, const EstimateRecord& rec) {
  return FitPoint{epsilon, rec.log_p, se_log(rec)};
}

ConstantFit fit_constant(const std::vector<FitPoint>& points, double exponent) {
  std::vector<double> x, y, se;
  std::vector<double> eps;
  for (const auto& p : points) {
    if (!std::isfinite(p.log_p)) continue;
    x.push_back(std::pow(p.epsilon, -exponent));
    y.push_back(-p.log_p);
    se.push_back(std::isfinite(p.se) && p.se > 0 ? p.se : 1.0);
    eps.push_back(p.epsilon);
  }
  if (x.size() < 3) throw std::invalid_argument("fit_constant: need >= 3 usable points");
  const LinearFit lf = weighted_linear_fit(x, y, se);
  ConstantFit fit;
  fit.lambda_hat = lf.slope;
  fit.stderr_lambda = lf.slope_se;
  fit.exponent = exponent;
  fit.intercept = lf.intercept;
  fit.epsilons = std::move(eps);
  return fit;
}

namespace {

double fit_sse(const std::vector<FitPoint>& points, double exponent) {
  std::vector<double> x, y, se;
  for (const auto& p : points) {
    if (!std::isfinite(p.log_p)) continue;
    x.push_back(std::pow(p.epsilon, -exponent));
    y.push_back(-p.log_p);
    se.push_back(std::isfinite(p.se) && p.se > 0 ? p.se : 1.0);
  }
  const LinearFit lf = weighted_linear_fit(x, y, se);
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = (y[i] - lf.slope * x[i] - lf.intercept) / se[i];
    sse += r * r;
  }
  return sse;
}

}  // namespace

ConstantFit fit_free_exponent(const std::vector<FitPoint>& points, double exp_lo, double exp_hi) {
  // Golden-section scan; the objective is smooth and unimodal in practice.
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = exp_lo, b = exp_hi;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = fit_sse(points, c);
  double fd = fit_sse(points, d);
  for (int it = 0; it < 80; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = fit_sse(points, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = fit_sse(points, d);
    }
  }
  return fit_constant(points, 0.5 * (a + b));
}

// --- moderate regime ----------------------------------------------------------------

ModerateResult moderate_regime(const ModerateFactory& factory,
                               const std::function<double(double)>& phi,
                               const std::vector<double>& eps_list, std::size_t plain_n,
                               RngStream stream, std::size_t threads) {
  ModerateResult result;
  std::vector<double> xs, ys, ses;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    const double eps = eps_list[i];
    const double ph = phi(eps);
    if (!(ph > 0.0)) throw std::invalid_argument("moderate_regime: phi must be positive");
    ModerateQuery query = factory(eps);
    ModerateRow row;
    row.epsilon = eps;
    row.phi = ph;
    row.radius = query.radius;
    row.phi_ok = ph <= std::abs(std::log(eps));
    row.estimate = estimate_plain(query.model, query.radius, plain_n, stream.child(i), threads);
    row.normalized = row.estimate.log_p / ph;
    if (std::isfinite(row.estimate.log_p)) {
      xs.push_back(ph);
      ys.push_back(-row.estimate.log_p);
      ses.push_back(se_log(row.estimate));
    }
    result.rows.push_back(std::move(row));
  }
  if (xs.size() >= 2) {
    const LinearFit lf = weighted_linear_fit(xs, ys, ses);
    result.slope_constant = lf.slope;
    result.slope_se = lf.slope_se;
  }
  return result;
}

// --- Chung diagnostic ------------------------------------------------------------------

std::vector<ChungRow> chung_statistic(const std::vector<double>& times,
                                      const std::vector<double>& values, std::size_t count,
                                      const std::vector<double>& eps_grid) {
  if (eps_grid.size() < 8) throw std::invalid_argument("chung_statistic: need >= 8 eps points");
  const std::size_t nt = times.size();
  if (values.size() != count * nt) throw std::invalid_argument("chung_statistic: shape mismatch");
  std::vector<double> eps_sorted = eps_grid;
  std::sort(eps_sorted.begin(), eps_sorted.end(), std::greater<>());
  const std::size_t ne = eps_sorted.size();

  std::vector<double> r_all(count * ne), ri_all(count * ne);
  for (std::size_t p = 0; p < count; ++p) {
    const double* path = values.data() + p * nt;
    double runinf = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < ne; ++e) {
      const double eps = eps_sorted[e];
      double sup = 0.0;
      for (std::size_t i = 0; i < nt && times[i] <= eps * (1.0 + 1e-12); ++i)
        sup = std::max(sup, std::abs(path[i]));
      const double r = sup / chung_psi(eps);
      runinf = std::min(runinf, r);
      r_all[p * ne + e] = r;
      ri_all[p * ne + e] = runinf;
    }
  }

  std::vector<ChungRow> rows(ne);
  std::vector<double> col(count);
  auto pct = [&](std::vector<double>& v, double q) {
    std::sort(v.begin(), v.end());
    return v[std::min(count - 1, static_cast<std::size_t>(q * static_cast<double>(count)))];
  };
  for (std::size_t e = 0; e < ne; ++e) {
    ChungRow row;
    row.epsilon = eps_sorted[e];
    for (std::size_t p = 0; p < count; ++p) col[p] = r_all[p * ne + e];
    row.r_p10 = pct(col, 0.10);
    row.r_p50 = pct(col, 0.50);
    row.r_p90 = pct(col, 0.90);
    for (std::size_t p = 0; p < count; ++p) col[p] = ri_all[p * ne + e];
    row.runinf_p10 = pct(col, 0.10);
    row.runinf_p50 = pct(col, 0.50);
    row.runinf_p90 = pct(col, 0.90);
    rows[e] = row;
  }
  return rows;
}

std::vector<ChungRow> chung_statistic(const samplers::PathEnsemble& paths,
                                      const std::vector<double>& eps_grid) {
  return chung_statistic(paths.grid.points(), paths.values, paths.count, eps_grid);
}

// --- min-over-grid ------------------------------------------------------------------------

std::size_t dyadic_grid_size(std::size_t m, double q, double theta) {
  if (m < 1) throw std::invalid_argument("dyadic_grid_size: m >= 1");
  const double level = std::floor(q * std::log2(static_cast<double>(m)));
  const double count = std::floor(theta * std::pow(2.0, level)) + 1.0;
  return static_cast<std::size_t>(count);
}

MinGridResult min_grid_experiment(const std::vector<std::size_t>& n_list, double alpha, double q,
                                  double gamma, double theta, double lambda_hat,
                                  std::size_t window_points, const SplittingConfig& cfg,
                                  RngStream stream, std::size_t threads) {
  MinGridResult result;
  result.gamma = gamma;
  result.gamma_max = std::pow(2.0 * lambda_hat * (1.0 + alpha) / (kPi * q), 0.25);
  if (!(gamma > 0.0 && gamma < result.gamma_max))
    throw std::invalid_argument(
        "min_grid_experiment: gamma must satisfy 0 < gamma < (2 lambda (1+alpha)/(pi q))^{1/4}");
  result.predicted_exponent =
      -(2.0 * lambda_hat * (1.0 + alpha) / (kPi * std::pow(gamma, 4.0)) - q);

  std::vector<double> xs, ys, ses;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const std::size_t n = n_list[i];
    const double t_n = samplers::window_time(n, alpha);
    const double t_np1 = samplers::window_time(n + 1, alpha);
    const double u_lo = t_np1 / t_n;
    const double wsq = std::pow(static_cast<double>(n), 1.0 + alpha);  // |log t_n|

    // All quantities in rescaled units: X'(u) = I(u t_n) / t_n^{1/4}.
    samplers::TimeGrid wgrid{window_points, u_lo, 1.0};
    auto cov = [u_lo, wsq](double u, double v) {
      return kernels::cov_i_window_scaled(u, v, u_lo, wsq);
    };
    ScoreModel model = make_cov_score(cov, wgrid, u_lo, 1.0);
    const double radius = gamma * std::pow((1.0 + alpha) * std::log(static_cast<double>(n)), -0.25);

    MinGridRow row;
    row.n = n;
    row.t_n = t_n;
    row.radius_scaled = radius;
    row.grid_size = dyadic_grid_size(n, q, theta);
    row.site = estimate_splitting(model, radius, cfg, stream.child(i), threads);

    // Sites are exactly independent (disjoint noise windows), so the min over
    // the grid has probability 1 - (1 - p1)^M.
    const double p1 = row.site.p_hat;
    const double md = static_cast<double>(row.grid_size);
    if (p1 > 0.0 && p1 < 1.0) {
      row.log_p_min = std::log(-std::expm1(md * std::log1p(-p1)));
      row.se_log_min = se_log(row.site);
    } else {
      row.log_p_min = p1 >= 1.0 ? 0.0 : -std::numeric_limits<double>::infinity();
      row.se_log_min = std::numeric_limits<double>::infinity();
    }
    if (std::isfinite(row.log_p_min)) {
      xs.push_back(std::log(static_cast<double>(n)));
      ys.push_back(row.log_p_min);
      ses.push_back(row.se_log_min);
    }
    result.rows.push_back(std::move(row));
  }
  if (xs.size() >= 2) {
    const LinearFit lf = weighted_linear_fit(xs, ys, ses);
    result.slope = lf.slope;
    result.slope_se = lf.slope_se;
  }
  return result;
}

}  // namespace sblab::smallball
