#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sblab/kernels.hpp"
#include "sblab/math_util.hpp"
#include "sblab/spde.hpp"
#include "sblab/threading.hpp"

using namespace sblab;
using namespace sblab::spde;

namespace {

SpdeConfig base_config(std::size_t m, double horizon, Scheme scheme = Scheme::SemiImplicit) {
  SpdeConfig cfg;
  cfg.m = m;
  const double h = 2.0 / static_cast<double>(m);
  cfg.dt = 0.25 * h * h;
  cfg.horizon = horizon;
  cfg.sigma = [](double v) { return std::cos(v); };
  cfg.u0 = [](double x) { return std::sin(kPi * x); };
  cfg.scheme = scheme;
  return cfg;
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    const double fa = static_cast<double>(i) / static_cast<double>(a.size());
    const double fb = static_cast<double>(j) / static_cast<double>(b.size());
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

}  // namespace

TEST_CASE("zero sigma reduces to the deterministic heat flow") {
  auto cfg = base_config(64, 0.02);
  cfg.sigma = [](double) { return 0.0; };
  const auto noise = make_noise(cfg, RngStream{31, 0});
  const auto u = solve_u(cfg, noise);
  const auto semi = heat_semigroup(cfg);
  for (std::size_t k = 0; k <= u.steps; ++k)
    for (std::size_t j = 0; j < u.m; ++j) CHECK(u.at(k, j) == semi.at(k, j));
  // heat flow contracts toward the mean
  double amp0 = 0.0, amp1 = 0.0;
  for (std::size_t j = 0; j < u.m; ++j) {
    amp0 = std::max(amp0, std::abs(u.at(0, j)));
    amp1 = std::max(amp1, std::abs(u.at(u.steps, j)));
  }
  CHECK(amp1 < amp0);
}

TEST_CASE("unit sigma from zero data coincides with the coupled linear solve") {
  for (auto scheme : {Scheme::SemiImplicit, Scheme::Explicit}) {
    auto cfg = base_config(64, 0.02, scheme);
    cfg.sigma = [](double) { return 1.0; };
    cfg.u0 = [](double) { return 0.0; };
    const auto noise = make_noise(cfg, RngStream{32, 0});
    const auto u = solve_u(cfg, noise);
    const auto z = solve_z_coupled(cfg, noise);
    for (std::size_t k = 0; k <= u.steps; ++k)
      for (std::size_t j = 0; j < u.m; ++j) CHECK(u.at(k, j) == z.at(k, j));
  }
}

TEST_CASE("linear solve is linear in the noise") {
  auto cfg = base_config(32, 0.02);
  auto noise = make_noise(cfg, RngStream{33, 0});
  const auto z1 = solve_z_coupled(cfg, noise);
  for (double& v : noise.values) v *= 2.0;
  const auto z2 = solve_z_coupled(cfg, noise);
  double scale = 0.0;
  for (std::size_t k = 0; k <= z1.steps; ++k)
    for (std::size_t j = 0; j < z1.m; ++j)
      scale = std::max(scale, std::abs(z2.at(k, j) - 2.0 * z1.at(k, j)));
  CHECK(scale < 1e-13);
}

TEST_CASE("constant sigma cancels the linearization error to machine precision") {
  for (auto scheme : {Scheme::SemiImplicit, Scheme::Explicit}) {
    auto cfg = base_config(64, 0.02, scheme);
    cfg.sigma = [](double) { return 1.7; };
    // u0 is arbitrary here; the cancellation is an identity of the scheme
    const auto noise = make_noise(cfg, RngStream{34, 0});
    const auto u = solve_u(cfg, noise);
    const auto z = solve_z_coupled(cfg, noise);
    const auto err = linearization_error(u, z, cfg);
    double umax = 0.0;
    for (double v : u.values) umax = std::max(umax, std::abs(v));
    CHECK(err.max_abs_up_to(err.steps) < 1e-12 * std::max(1.0, umax));
    // and the error field starts at zero by construction
    for (std::size_t j = 0; j < err.m; ++j) CHECK(err.at(0, j) == 0.0);
  }
}

TEST_CASE("provenance and shape guards") {
  auto cfg = base_config(32, 0.01);
  const auto noise_a = make_noise(cfg, RngStream{35, 0});
  const auto noise_b = make_noise(cfg, RngStream{35, 1});
  const auto u = solve_u(cfg, noise_a);
  const auto z = solve_z_coupled(cfg, noise_b);
  CHECK_THROWS_AS(linearization_error(u, z, cfg), std::invalid_argument);

  auto bad = cfg;
  bad.scheme = Scheme::Explicit;
  bad.dt = bad.h() * bad.h();  // violates dt <= h^2/2
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("coupled linear solve matches the mode-series variance") {
  // m = 256, dt = h^2/4, Var Z(0.1, x) within 5% of the series value,
  // averaging the empirical variance over the (stationary) spatial grid.
  auto cfg = base_config(256, 0.1);
  cfg.sigma = [](double) { return 1.0; };
  cfg.u0 = [](double) { return 0.0; };
  const std::size_t replicas = 300;
  const double target = kernels::cov_z_torus(0.1, 0.1, {0.0}, {0.0}, 8192);
  double acc = 0.0;
  std::size_t cells = 0;
  for (std::size_t r = 0; r < replicas; ++r) {
    const auto noise = make_noise(cfg, RngStream{36, r});
    const auto z = solve_z_coupled(cfg, noise);
    for (std::size_t j = 0; j < z.m; ++j) {
      const double v = z.at(z.steps, j);
      acc += v * v;
      ++cells;
    }
  }
  const double emp = acc / static_cast<double>(cells);
  CHECK(std::abs(emp - target) / target < 0.05);
}

TEST_CASE("self-convergence of sup functionals under refinement") {
  // (m, dt) against (2m, dt/4) with the fine noise aggregated onto the coarse
  // cells, so the two solves are driven by the same realization.  The horizon
  // is a dyadic multiple of the coarse dt so the step counts nest exactly.
  // The sup bias decays like sqrt(h); at this resolution it sits inside the
  // 1% KS band (coarser pairs are pathwise-close but KS-distinguishable).
  const double t = 2560.0 * std::pow(2.0, -18.0);
  const std::size_t replicas = 250;
  auto coarse = base_config(512, t);
  auto fine = base_config(1024, t);
  REQUIRE(fine.dt == doctest::Approx(coarse.dt / 4.0));
  REQUIRE(fine.steps() == 4 * coarse.steps());
  std::vector<double> sup_coarse(replicas), sup_fine(replicas);
  sblab::parallel_for(replicas, 2, [&](std::size_t r) {
    const auto noise_fine = make_noise(fine, RngStream{37, r});
    NoiseArray noise_coarse;
    noise_coarse.steps = coarse.steps();
    noise_coarse.m = coarse.m;
    noise_coarse.dt = coarse.dt;
    noise_coarse.provenance = noise_fine.provenance;
    noise_coarse.values.assign(noise_coarse.steps * noise_coarse.m, 0.0);
    // coarse cell value = (1/2) sum of its 4x2 fine sub-cells (cell-average
    // scaling of the same white-noise increment)
    for (std::size_t k = 0; k < noise_fine.steps; ++k)
      for (std::size_t j = 0; j < noise_fine.m; ++j)
        noise_coarse.values[(k / 4) * coarse.m + (j / 2)] += 0.5 * noise_fine.at(k, j);
    {
      const auto u = solve_u(coarse, noise_coarse);
      double s = 0.0;
      for (double v : u.values) s = std::max(s, std::abs(v));
      sup_coarse[r] = s;
    }
    {
      const auto u = solve_u(fine, noise_fine);
      double s = 0.0;
      for (double v : u.values) s = std::max(s, std::abs(v));
      sup_fine[r] = s;
    }
  });
  const double ks = ks_statistic(sup_coarse, sup_fine);
  // 1% critical value for the two-sample statistic
  const double critical = 1.628 * std::sqrt(2.0 / static_cast<double>(replicas));
  CHECK(ks < critical);
  // refinement moves the pathwise sup by well under 5% on average
  double rel = 0.0;
  for (std::size_t r = 0; r < replicas; ++r)
    rel += std::abs(sup_fine[r] - sup_coarse[r]) / sup_fine[r];
  CHECK(rel / static_cast<double>(replicas) < 0.05);
}

TEST_CASE("parabolic modulus of the nonlinear solution") {
  auto cfg = base_config(64, 0.05);
  const std::size_t replicas = 400;
  std::vector<spde::Field> fields;
  fields.reserve(replicas);
  for (std::size_t r = 0; r < replicas; ++r)
    fields.push_back(solve_u(cfg, make_noise(cfg, RngStream{39, r})));
  auto rng = RngStream{40, 0}.rng();
  double worst = 0.0;
  for (int pair = 0; pair < 30; ++pair) {
    const std::size_t k1 = 1 + rng.next_u64() % fields[0].steps;
    const std::size_t k2 = 1 + rng.next_u64() % fields[0].steps;
    const std::size_t j1 = rng.next_u64() % cfg.m;
    const std::size_t j2 = rng.next_u64() % cfg.m;
    const double delta = kernels::parabolic_metric(
        fields[0].dt * static_cast<double>(k1), cfg.x_point(j1),
        fields[0].dt * static_cast<double>(k2), cfg.x_point(j2));
    if (delta < 1e-6) continue;
    double m2 = 0.0;
    for (const auto& f : fields) {
      const double d = f.at(k1, j1) - f.at(k2, j2);
      m2 += d * d;
    }
    m2 /= static_cast<double>(replicas);
    worst = std::max(worst, std::sqrt(m2) / delta);
  }
  // fitted constant is a diagnostic; it must exist and stay modest
  CHECK(worst > 0.0);
  CHECK(worst < 10.0);
}

TEST_CASE("error-rate study basics") {
  // sigma = 1 and constant u0 make the normalized statistic exactly zero
  auto flat = base_config(32, 0.01);
  flat.sigma = [](double) { return 1.0; };
  flat.u0 = [](double) { return 0.25; };
  const auto rows0 = error_rate_study(flat, {0.005, 0.01}, 50, RngStream{41, 0});
  for (const auto& row : rows0) {
    CHECK(row.median_ratio == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(row.max_ratio < 1e-10);
  }

  // cos sigma: the normalized sup statistic stays of the same size across t
  auto cfg = base_config(64, 0.01);
  const auto rows = error_rate_study(cfg, {0.001, 0.01}, 120, RngStream{42, 0}, 2);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].median_ratio > 0.0);
  CHECK(rows[1].median_ratio > 0.0);
  const double stability = rows[0].median_ratio / rows[1].median_ratio;
  CHECK(stability > 0.2);
  CHECK(stability < 5.0);
  // pointwise tails decay: negative fitted slope of the log-survival curve
  CHECK(rows[0].tail_slope < 0.0);
  CHECK(rows[1].tail_slope < 0.0);
}
