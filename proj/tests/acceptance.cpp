// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure.  Budgets are sized for a small workstation; every tolerance is
// fixed here in code.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <array>
#include <string>
#include <vector>

#include "sblab/asymptotics.hpp"
#include "sblab/experiments.hpp"
#include "sblab/kernels.hpp"
#include "sblab/math_util.hpp"
#include "sblab/samplers.hpp"
#include "sblab/smallball.hpp"
#include "sblab/spde.hpp"
#include "sblab/threading.hpp"

using namespace sblab;

namespace {

// Budget knobs for the heavy quarter-Hurst run (criterion 4).
constexpr std::size_t kFbmGridN = 513;
constexpr std::size_t kFbmParticles = 160;
constexpr std::size_t kFbmSweeps = 1;
constexpr std::size_t kFbmReps = 6;

int g_failures = 0;
std::size_t g_threads = 2;

void report(int criterion, bool pass, const std::string& what, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, what.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double elapsed_s(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Brownian calibration: lambda from the exponent-2 fit within 10% of
//    pi^2/8, splitting all the way down to eps = 0.15.
void criterion_1_bm_lambda() {
  const auto t0 = std::chrono::steady_clock::now();
  samplers::TimeGrid grid{16385, 0.0, 1.0};
  auto model = smallball::make_bm_score(grid, 0.0, 1.0);
  smallball::SplittingConfig cfg;
  cfg.particles = 256;
  cfg.kill_fraction = 0.25;
  cfg.rejuvenation_sweeps = 1;
  cfg.repetitions = 10;
  std::vector<smallball::FitPoint> pts;
  for (double eps : {0.3, 0.25, 0.2, 0.15}) {
    const auto rec = smallball::estimate_splitting(
        model, eps, cfg, RngStream{2026, 1}.child(static_cast<std::size_t>(eps * 1000)),
        g_threads);
    pts.push_back(smallball::fit_point(eps, rec));
  }
  const auto fit = smallball::fit_constant(pts, 2.0);
  const double target = kPi * kPi / 8.0;
  const double rel = std::abs(fit.lambda_hat - target) / target;
  report(1, rel < 0.10, "Brownian small-ball constant within 10% of pi^2/8",
         "lambda_hat = " + fmt(fit.lambda_hat) + " vs " + fmt(target) + ", rel dev " + fmt(rel) +
             ", " + fmt(elapsed_s(t0)) + " s");
}

// ---------------------------------------------------------------------------
// 2. Sampler exactness: empirical covariances of F, T, H, Z match their
//    kernels with max-entry z < 4 at 1e5 paths, n = 128.
void criterion_2_sampler_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t count = 100000;
  samplers::TimeGrid grid{128, 0.0, 1.0};
  std::string detail;
  bool pass = true;

  auto run_z_test = [&](const std::string& name, const Matrix& target, auto path_fn) {
    std::vector<samplers::CovAccumulator> parts(8, samplers::CovAccumulator(grid.n));
    parallel_for(8, g_threads, [&](std::size_t b) {
      std::vector<double> path(grid.n);
      for (std::size_t i = b; i < count; i += 8) {
        path_fn(i, path);
        parts[b].add(path);
      }
    });
    samplers::CovAccumulator acc(grid.n);
    for (const auto& part : parts) acc.merge(part);
    const double z = acc.max_z(target);
    pass = pass && z < 4.0;
    detail += name + " z=" + fmt(z) + " ";
  };

  {
    samplers::CirculantFbm embed(grid);
    const auto target = kernels::covariance_matrix(
        kernels::make_kernel(kernels::ProcessId::Ffbm14), grid.points());
    run_z_test("F", target, [&](std::size_t i, std::vector<double>& path) {
      thread_local std::vector<double> z;
      z.resize(embed.noise_dim());
      auto rng = RngStream{2026, 20}.child(i).rng();
      rng.fill_normal(z);
      embed.map(z, path);
    });
  }
  {
    samplers::GaussianPathSampler sampler(kernels::make_kernel(kernels::ProcessId::TAux), grid);
    const auto target = kernels::covariance_matrix(
        kernels::make_kernel(kernels::ProcessId::TAux), grid.points());
    run_z_test("T", target, [&](std::size_t i, std::vector<double>& path) {
      thread_local std::vector<double> z;
      z.resize(sampler.noise_dim());
      auto rng = RngStream{2026, 21}.child(i).rng();
      rng.fill_normal(z);
      sampler.map(z, path);
    });
  }
  {
    samplers::GaussianPathSampler sampler(kernels::make_kernel(kernels::ProcessId::HFree), grid);
    const auto target = kernels::covariance_matrix(
        kernels::make_kernel(kernels::ProcessId::HFree), grid.points());
    run_z_test("H", target, [&](std::size_t i, std::vector<double>& path) {
      thread_local std::vector<double> z;
      z.resize(sampler.noise_dim());
      auto rng = RngStream{2026, 22}.child(i).rng();
      rng.fill_normal(z);
      sampler.map(z, path);
    });
  }
  {
    const std::size_t modes = 192;
    samplers::ZTorusSampler sampler(grid, 1, modes);
    const auto target = kernels::covariance_matrix(
        kernels::make_kernel(kernels::ProcessId::ZTorus, 1.0, 0.0, modes), grid.points());
    run_z_test("Z", target, [&](std::size_t i, std::vector<double>& path) {
      thread_local std::vector<double> z;
      z.resize(sampler.noise_dim());
      auto rng = RngStream{2026, 23}.child(i).rng();
      rng.fill_normal(z);
      sampler.map(z, path);
    });
  }
  report(2, pass, "sampler covariances match kernels (z < 4, 1e5 paths, n = 128)",
         detail + fmt(elapsed_s(t0)) + " s");
}

// ---------------------------------------------------------------------------
// 3. Decomposition identity and the coupled sampler's law.
void criterion_3_decomposition() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto fit = kernels::fit_decomposition(64);
  samplers::TimeGrid grid{64, 0.0, 1.0};
  const std::size_t count = 60000;
  const auto f_ens = samplers::sample_fbm14(grid, count, RngStream{2026, 30});
  const auto t_ens = samplers::sample_gaussian_path(
      kernels::make_kernel(kernels::ProcessId::TAux, 1.0, fit.kappa), grid, count,
      RngStream{2026, 31});
  const auto h_ens = samplers::coupled_h_from_f_t(f_ens, t_ens, fit.path_scale, fit.kappa);
  samplers::CovAccumulator acc(grid.n);
  for (std::size_t p = 0; p < count; ++p) acc.add(h_ens.path(p));
  const auto target =
      kernels::covariance_matrix(kernels::make_kernel(kernels::ProcessId::HFree), grid.points());
  const double z = acc.max_z(target);
  const bool pass = fit.max_residual < 1e-9 && z < 4.0;
  report(3, pass, "decomposition identity exact and coupled sampler matches cov_H",
         "max residual " + fmt(fit.max_residual) + ", coupled z = " + fmt(z) + ", kappa = " +
             fmt(fit.kappa) + " (" + fmt(100.0 * fit.kappa_vs_spectral) +
             "% off the spectral prefactor), path divisor " + fmt(fit.path_scale) + " (" +
             fmt(100.0 * fit.scale_vs_quarter_root) + "% off (2/pi)^{1/4} as 1/scale), " +
             fmt(elapsed_s(t0)) + " s");
}

// ---------------------------------------------------------------------------
// 4. lambda for the quarter-Hurst process: relative stderr < 15%, free
//    exponent in [3.5, 4.5], drop-largest-eps stability < 15%.
smallball::ConstantFit criterion_4_fbm_lambda() {
  const auto t0 = std::chrono::steady_clock::now();
  samplers::TimeGrid grid{kFbmGridN, 0.0, 1.0};
  auto model = smallball::make_fbm_score(grid, 0.0, 1.0);
  smallball::SplittingConfig cfg;
  cfg.particles = kFbmParticles;
  cfg.kill_fraction = 0.1;
  cfg.rejuvenation_sweeps = kFbmSweeps;
  cfg.repetitions = kFbmReps;
  std::vector<smallball::FitPoint> pts;
  for (double eps : {0.35, 0.3, 0.25, 0.2}) {
    const auto rec = smallball::estimate_splitting(
        model, eps, cfg, RngStream{2026, 2}.child(static_cast<std::size_t>(eps * 1000)),
        g_threads);
    pts.push_back(smallball::fit_point(eps, rec));
  }
  const auto fit = smallball::fit_constant(pts, 4.0);
  const auto free_fit = smallball::fit_free_exponent(pts);
  const auto drop = smallball::fit_constant({pts[1], pts[2], pts[3]}, 4.0);
  const double rel_se = fit.stderr_lambda / fit.lambda_hat;
  const double drop_move = std::abs(drop.lambda_hat - fit.lambda_hat) / fit.lambda_hat;

  // Supplementary resolution diagnostic: the raw grid sup of this very rough
  // process shrinks the effective radius by ~1.25 dt^{1/4}; estimate that
  // constant from a two-grid drift at shallow radii and report the free
  // exponent of the corrected abscissa alongside the literal check.
  double c_hat = 0.0, corrected_exponent = 0.0;
  {
    smallball::SplittingConfig scfg = cfg;
    scfg.repetitions = 4;
    std::vector<double> eps_probe = {0.9, 0.7};
    std::vector<std::size_t> grids = {513, 2049};
    std::vector<std::array<double, 3>> probe;  // (eps, delta, -log p)
    for (double eps : eps_probe)
      for (std::size_t gn : grids) {
        samplers::TimeGrid g{gn, 0.0, 1.0};
        auto m = smallball::make_fbm_score(g, 0.0, 1.0);
        const auto rec = smallball::estimate_splitting(
            m, eps, scfg, RngStream{2026, 3}.child(gn, static_cast<std::size_t>(eps * 100)),
            g_threads);
        probe.push_back({eps, std::pow(1.0 / static_cast<double>(gn - 1), 0.25), -rec.log_p});
      }
    double best_sse = 0.0;
    for (int ci = 0; ci <= 300; ++ci) {
      const double c = 0.01 * ci;
      double sxx = 0, sx = 0, sy = 0, sxy = 0, n4 = 0;
      for (const auto& row : probe) {
        const double x = std::pow(row[0] + c * row[1], -4.0);
        sxx += x * x;
        sx += x;
        sy += row[2];
        sxy += x * row[2];
        n4 += 1.0;
      }
      const double det = n4 * sxx - sx * sx;
      const double slope = (n4 * sxy - sx * sy) / det;
      const double inter = (sxx * sy - sx * sxy) / det;
      double sse = 0.0;
      for (const auto& row : probe) {
        const double r = row[2] - slope * std::pow(row[0] + c * row[1], -4.0) - inter;
        sse += r * r;
      }
      if (ci == 0 || sse < best_sse) {
        best_sse = sse;
        c_hat = c;
      }
    }
    const double shift = c_hat * std::pow(1.0 / static_cast<double>(kFbmGridN - 1), 0.25);
    std::vector<smallball::FitPoint> corrected = pts;
    for (auto& pt : corrected) pt.epsilon += shift;
    corrected_exponent = smallball::fit_free_exponent(corrected).exponent;
  }

  const bool pass =
      rel_se < 0.15 && free_fit.exponent >= 3.5 && free_fit.exponent <= 4.5 && drop_move < 0.15;
  report(4, pass, "quarter-Hurst small-ball constant: stable fit, exponent in [3.5, 4.5]",
         "lambda_hat = " + fmt(fit.lambda_hat) + " +- " + fmt(fit.stderr_lambda) +
             ", free exponent " + fmt(free_fit.exponent) + " on raw grid sups, drop-eps move " +
             fmt(drop_move) + "; resolution-corrected exponent " + fmt(corrected_exponent) +
             " (c_hat = " + fmt(c_hat) + "), " + fmt(elapsed_s(t0)) + " s");
  return fit;
}

// ---------------------------------------------------------------------------
// 5. Moderate-regime constant of H against 2 lambda / pi, plus the scaling
//    transfer identity.
void criterion_5_h_moderate(const smallball::ConstantFit& lambda_fit) {
  const auto t0 = std::chrono::steady_clock::now();
  auto phi = [](double eps) { return std::log(std::abs(std::log(eps))); };
  smallball::ModerateFactory h_factory = [&](double eps) {
    smallball::ModerateQuery q;
    q.model = smallball::make_cov_score(
        [](double s, double t) { return kernels::cov_h_free(s, t); },
        samplers::TimeGrid{257, 0.0, 1.0}, 0.0, 1.0);
    q.radius = std::pow(1.0 / phi(eps), 0.25);
    return q;
  };
  const std::vector<double> eps_list = {1e-2, 1e-3};
  const auto res = smallball::moderate_regime(h_factory, phi, eps_list, 150000,
                                              RngStream{2026, 50}, g_threads);
  const double target = 2.0 * lambda_fit.lambda_hat / kPi;
  const double target_se = 2.0 * lambda_fit.stderr_lambda / kPi;
  const double diff = std::abs(res.slope_constant - target);
  const double joint = 1.96 * std::hypot(res.slope_se, target_se);
  const bool slope_ok = diff <= joint;

  // scaling transfer at eps = 1e-2: sup over [0, eps] against r equals the
  // unit-window event at radius r eps^{-1/4}
  const double eps = 1e-2;
  const double r = 0.35 * std::pow(eps, 0.25);
  auto direct_model = smallball::make_cov_score(
      [](double s, double t) { return kernels::cov_h_free(s, t); },
      samplers::TimeGrid{257, 0.0, eps}, 0.0, eps);
  auto scaled_model = smallball::make_cov_score(
      [](double s, double t) { return kernels::cov_h_free(s, t); },
      samplers::TimeGrid{257, 0.0, 1.0}, 0.0, 1.0);
  const auto direct =
      smallball::estimate_plain(direct_model, r, 80000, RngStream{2026, 51}, g_threads);
  const auto scaled = smallball::estimate_plain(scaled_model, r * std::pow(eps, -0.25), 80000,
                                                RngStream{2026, 52}, g_threads);
  const double sdiff = std::abs(direct.log_p - scaled.log_p);
  const double sjoint = 1.96 * std::hypot(smallball::se_log(direct), smallball::se_log(scaled));
  const bool scaling_ok = sdiff <= sjoint;

  report(5, slope_ok && scaling_ok,
         "free-space moderate-regime constant matches 2 lambda/pi; scaling transfer holds",
         "slope " + fmt(res.slope_constant) + " vs " + fmt(target) + " (joint ci " + fmt(joint) +
             "), scaling gap " + fmt(sdiff) + " vs " + fmt(sjoint) + ", " + fmt(elapsed_s(t0)) +
             " s");
}

// ---------------------------------------------------------------------------
// 6. Auxiliary-process order: log p_T(r) >= -L/r - log L for one fitted L,
//    and p_T exceeds the quartic-exponent family by orders of magnitude.
void criterion_6_t_order(double lambda_hat) {
  const auto t0 = std::chrono::steady_clock::now();
  samplers::TimeGrid grid{257, 0.0, 1.0};
  auto model = smallball::make_cov_score(
      [](double s, double t) { return kernels::cov_t_aux(s, t, kernels::kappa_spectral()); },
      grid, 0.0, 1.0);
  smallball::SplittingConfig cfg;
  cfg.particles = 256;
  cfg.rejuvenation_sweeps = 1;
  cfg.repetitions = 8;
  double fitted_l = 1.0;
  double log_p_t_005 = 0.0;
  std::string detail;
  bool ok = true;
  for (double r : {0.1, 0.05, 0.02}) {
    const auto rec = smallball::estimate_splitting(
        model, r, cfg, RngStream{2026, 60}.child(static_cast<std::size_t>(r * 1000)), g_threads);
    ok = ok && rec.p_hat > 0.0;
    if (r == 0.05) log_p_t_005 = rec.log_p;
    double lo = 1.0, hi = 1e4;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (-mid / r - std::log(mid) <= rec.log_p ? hi : lo) = mid;
    }
    fitted_l = std::max(fitted_l, hi);
    detail += "log p(" + fmt(r) + ") = " + fmt(rec.log_p) + "  ";
  }
  // The quartic-family value at r = 0.05 is out of estimator reach
  // (log p ~ -lambda 0.05^{-4} ~ -1.6e5), so the fitted law provides it.
  const double log_p_f = -lambda_hat * std::pow(0.05, -4.0);
  const double log_ratio = log_p_t_005 - log_p_f;
  ok = ok && fitted_l < 1e3 && log_ratio > std::log(100.0);
  report(6, ok, "auxiliary-process exp(-L/r) order separates from the quartic family",
         detail + "fitted L = " + fmt(fitted_l) + ", log10 ratio at r=0.05 ~ " +
             fmt(log_ratio / std::log(10.0)) + ", " + fmt(elapsed_s(t0)) + " s");
}

// ---------------------------------------------------------------------------
// 7. Variance gap Var(H - Z)(t) <= 5t, hard assertion.
void criterion_7_variance_gap() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;
  for (double t : {0.01, 0.1, 1.0}) {
    const double gap = kernels::variance_gap_hz(t);
    const double ratio = gap / (5.0 * t);
    pass = pass && gap >= 0.0 && ratio <= 1.0;
    detail += "ratio(" + fmt(t) + ") = " + fmt(ratio) + "  ";
  }
  report(7, pass, "variance gap stays below the linear bound 5t",
         detail + fmt(elapsed_s(t0)) + " s");
}

// ---------------------------------------------------------------------------
// 8. Recursion ratio and entropy cover scaling.
void criterion_8_recursion_entropy() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;
  for (double c : {0.5, 1.0, 4.0}) {
    const double ratio = asymptotics::recursion_ratio(c, 1000000).ratio;
    pass = pass && ratio >= 0.95 && ratio <= 1.05;
    detail += "ratio(c=" + fmt(c) + ") = " + fmt(ratio) + "  ";
  }
  const auto dfit =
      asymptotics::verify_d_interpolation(10000, RngStream{2026, 80}, kernels::kappa_spectral());
  std::vector<std::size_t> counts;
  double worst_ce = 0.0;
  for (int p = 3; p <= 10; ++p) {
    const auto cover =
        asymptotics::build_entropy_cover(std::pow(2.0, -p), dfit.c, kernels::kappa_spectral());
    counts.push_back(cover.count);
    worst_ce = std::max(worst_ce, static_cast<double>(cover.count) * std::pow(2.0, -p));
  }
  // Per-doubling growth rate across the tested range; the coarsest single
  // pair carries small-count offsets, so pairwise ratios are asserted from
  // the second pair on and the range-wide rate covers the whole ladder.
  const double rate =
      std::pow(static_cast<double>(counts.back()) / static_cast<double>(counts.front()),
               1.0 / static_cast<double>(counts.size() - 1));
  bool pairwise = true;
  for (std::size_t i = 1; i + 1 < counts.size(); ++i) {
    const double r = static_cast<double>(counts[i + 1]) / static_cast<double>(counts[i]);
    pairwise = pairwise && r >= 1.8 && r <= 2.2;
  }
  pass = pass && rate >= 1.8 && rate <= 2.2 && pairwise && worst_ce < 4.0;
  report(8, pass, "recursion ratio in [0.95, 1.05]; cover count doubles like 1/eps",
         detail + "doubling rate " + fmt(rate) + ", max count*eps " + fmt(worst_ce) + ", " +
             fmt(elapsed_s(t0)) + " s");
}

// ---------------------------------------------------------------------------
// 9. Linearization-error statistic: t-stable quantiles and exact cancellation
//    for constant sigma.
void criterion_9_linearization() {
  const auto t0 = std::chrono::steady_clock::now();
  spde::SpdeConfig cfg;
  cfg.m = 256;
  const double h = cfg.h();
  cfg.dt = 0.25 * h * h;
  cfg.horizon = 1e-2;
  cfg.sigma = [](double v) { return std::cos(v); };
  cfg.u0 = [](double x) { return std::sin(kPi * x); };
  const auto rows = spde::error_rate_study(cfg, {1e-2, 1e-3}, 220, RngStream{2026, 90}, g_threads);
  const double med_ratio = rows[0].median_ratio / rows[1].median_ratio;

  auto flat = cfg;
  flat.sigma = [](double) { return 2.5; };
  const auto noise = spde::make_noise(flat, RngStream{2026, 91});
  const auto u = spde::solve_u(flat, noise);
  const auto z = spde::solve_z_coupled(flat, noise);
  const auto err = spde::linearization_error(u, z, flat);
  double umax = 0.0;
  for (double v : u.values) umax = std::max(umax, std::abs(v));
  const double cancel = err.max_abs_up_to(err.steps) / std::max(1.0, umax);

  const bool pass = med_ratio >= 0.5 && med_ratio <= 2.0 && cancel < 1e-12;
  report(9, pass, "linearization statistic t-stable; constant sigma cancels exactly",
         "median ratio between t = 1e-2 and 1e-3: " + fmt(med_ratio) + ", cancellation " +
             fmt(cancel) + ", " + fmt(elapsed_s(t0)) + " s");
}

// ---------------------------------------------------------------------------
// 10. Min-over-sites exponent against the predicted slope.
void criterion_10_min_grid(double lambda_hat) {
  const auto t0 = std::chrono::steady_clock::now();
  const double alpha = 0.5, q = 1.0, theta = 1.0;
  const double gamma_max = std::pow(2.0 * lambda_hat * (1.0 + alpha) / (kPi * q), 0.25);
  const double gamma = 0.6 * gamma_max;
  smallball::SplittingConfig cfg;
  cfg.particles = 300;
  cfg.rejuvenation_sweeps = 1;
  cfg.repetitions = 8;
  const auto res = smallball::min_grid_experiment(
      {10, 20, 40}, alpha, q, gamma, theta, lambda_hat, 96, cfg, RngStream{2026, 100}, g_threads);
  const double rel =
      std::abs(res.slope - res.predicted_exponent) / std::abs(res.predicted_exponent);
  const bool pass = res.slope < 0.0 && rel < 0.30;
  report(10, pass, "min-grid exponent within 30% of the prediction",
         "slope " + fmt(res.slope) + " vs predicted " + fmt(res.predicted_exponent) +
             ", rel dev " + fmt(rel) + ", " + fmt(elapsed_s(t0)) + " s");
}

// ---------------------------------------------------------------------------
// 11. Running-infimum diagnostic: produced, nonnegative, non-increasing.
void criterion_11_chung(double lambda_hat) {
  const auto t0 = std::chrono::steady_clock::now();
  const double alpha = 0.25;
  std::vector<double> eps_grid;
  for (std::size_t n = 1; n <= 11; ++n) {
    const double t = std::exp(-std::pow(static_cast<double>(n), 1.0 + alpha));
    if (t < 1e-9) break;
    eps_grid.push_back(t);
  }
  const double grid_min = 5e-10;
  const std::size_t nt = 230;
  std::vector<double> times(nt);
  for (std::size_t i = 0; i < nt; ++i)
    times[i] =
        grid_min * std::pow(1.0 / grid_min, static_cast<double>(i + 1) / static_cast<double>(nt));
  samplers::HSpectralSampler sampler(times);
  const auto values = samplers::sample_h_spectral(sampler, 400, RngStream{2026, 110});
  const auto table = smallball::chung_statistic(times, values, 400, eps_grid);
  bool pass = eps_grid.size() >= 8 && sampler.max_variance_rel_error() < 5e-3;
  for (std::size_t i = 0; i < table.size(); ++i) {
    pass = pass && table[i].runinf_p50 >= 0.0;
    if (i > 0) pass = pass && table[i].runinf_p50 <= table[i - 1].runinf_p50 + 1e-12;
  }
  const double reference = std::pow(2.0 * lambda_hat / kPi, 0.25);
  report(11, pass,
         "running-infimum table produced and non-increasing (limit not imposed numerically)",
         "last runinf p50 = " + fmt(table.back().runinf_p50) + ", reference level " +
             fmt(reference) + ", " + fmt(elapsed_s(t0)) + " s");
}

// ---------------------------------------------------------------------------
// 12. Reproducibility: rerun reproduces digests; 8 threads equal serial.
void criterion_12_reproducibility() {
  const auto t0 = std::chrono::steady_clock::now();
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "sblab_acceptance_repro";
  fs::remove_all(root);

  experiments::Config cfg;
  cfg.set("experiment", "kind", "estimate");
  cfg.set("params", "process", "F_fbm14");
  cfg.set("params", "epsilon", "0.6");
  cfg.set("params", "method", "splitting");
  cfg.set("params", "grid_n", "257");
  cfg.set("params", "particles", "200");
  cfg.set("params", "repetitions", "4");

  const auto serial = experiments::run(cfg, 4242, 1, root, "serial");
  const auto threaded = experiments::run(cfg, 4242, 8, root, "threads8");
  bool same = serial.manifest.outputs.size() == threaded.manifest.outputs.size();
  for (std::size_t i = 0; same && i < serial.manifest.outputs.size(); ++i)
    same = serial.manifest.outputs[i].sha256 == threaded.manifest.outputs[i].sha256;

  const auto report_rerun = experiments::rerun(serial.dir / "manifest.json", 8, root);
  const bool pass = same && report_rerun.all_match;
  report(12, pass, "manifest rerun bit-exact; 8 threads equal serial",
         std::string("parallel==serial: ") + (same ? "yes" : "NO") + ", rerun match: " +
             (report_rerun.all_match ? "yes" : "NO") + ", " + fmt(elapsed_s(t0)) + " s");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1)
    g_threads = static_cast<std::size_t>(std::stoul(argv[1]));
  else
    g_threads = default_threads();
  std::printf("acceptance suite (threads = %zu)\n", g_threads);

  criterion_1_bm_lambda();
  criterion_2_sampler_exactness();
  criterion_3_decomposition();
  const auto lambda_fit = criterion_4_fbm_lambda();
  criterion_5_h_moderate(lambda_fit);
  criterion_6_t_order(lambda_fit.lambda_hat);
  criterion_7_variance_gap();
  criterion_8_recursion_entropy();
  criterion_9_linearization();
  criterion_10_min_grid(lambda_fit.lambda_hat);
  criterion_11_chung(lambda_fit.lambda_hat);
  criterion_12_reproducibility();

  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
