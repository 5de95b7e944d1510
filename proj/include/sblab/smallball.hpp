#ifndef SBLAB_SMALLBALL_HPP
#define SBLAB_SMALLBALL_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sblab/rng.hpp"
#include "sblab/samplers.hpp"
#include "sblab/spde.hpp"

namespace sblab::smallball {

// Every estimator works on a deterministic map from iid N(0,1) noise to the
// sup-norm score of the induced path over the query window.  Keeping the
// state Gaussian makes the splitting rejuvenation kernel exact for every
// process, including SPDE fields (the path is a map of its driving noise).
struct ScoreModel {
  std::size_t dim = 0;
  std::function<double(std::span<const double>)> score;
};

struct EstimateRecord {
  double p_hat = 0.0;
  double log_p = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 1.0;
  std::string method;  // "plain" | "splitting"
  std::size_t n_effective = 0;
  std::uint64_t cost = 0;  // score-map evaluations
};

// Standard error of log p implied by the stored 95% interval.
double se_log(const EstimateRecord& rec);

struct SplittingConfig {
  std::size_t particles = 400;       // >= 100
  double kill_fraction = 0.25;       // in (0,1), kill_fraction*particles >= 1
  double pcn_beta = 0.3;             // in (0,1]
  std::size_t rejuvenation_sweeps = 2;
  std::size_t repetitions = 10;      // independent runs for the CI
  std::size_t max_stages = 200000;
  bool adapt_beta = true;            // keep acceptance in [0.2, 0.6]
};

// Monte Carlo proportion with an exact Clopper-Pearson 95% interval.
EstimateRecord estimate_plain(const ScoreModel& model, double epsilon, std::size_t n,
                              RngStream stream, std::size_t threads = 1);

// Adaptive multilevel splitting driving sup-norm levels down toward epsilon.
// Rejuvenation uses the law-preserving move z' = sqrt(1-beta^2) z + beta xi
// accepted only while the level constraint holds; the estimator is the
// product of stage survival fractions, with the CI from independent
// repetitions.
EstimateRecord estimate_splitting(const ScoreModel& model, double epsilon,
                                  const SplittingConfig& cfg, RngStream stream,
                                  std::size_t threads = 1);

// --- score-model builders ------------------------------------------------------
// Window [lo, hi] selects the grid points entering the sup.
ScoreModel make_bm_score(const samplers::TimeGrid& grid, double window_lo, double window_hi);
ScoreModel make_fbm_score(const samplers::TimeGrid& grid, double window_lo, double window_hi);
ScoreModel make_cov_score(std::function<double(double, double)> cov,
                          const samplers::TimeGrid& grid, double window_lo, double window_hi);
ScoreModel make_z0_score(const samplers::TimeGrid& grid, std::size_t modes);
// sup_t |u(t, x_j) - u0(x_j)| (or uncentered) at one spatial index.
ScoreModel make_spde_score(const spde::SpdeConfig& config, std::size_t x_index, bool center_at_u0);

// --- constant extraction --------------------------------------------------------
struct FitPoint {
  double epsilon = 0.0;
  double log_p = 0.0;
  double se = 0.0;  // standard error of log_p
};

FitPoint fit_point(double epsilon, const EstimateRecord& rec);

struct ConstantFit {
  double lambda_hat = 0.0;
  double stderr_lambda = 0.0;
  double exponent = 4.0;
  double intercept = 0.0;
  std::vector<double> epsilons;
};

// Weighted least squares of -log p against eps^{-exponent}; p = 0 points must
// be excluded by the caller (they carry no usable log value).
ConstantFit fit_constant(const std::vector<FitPoint>& points, double exponent = 4.0);
// Free-exponent diagnostic: scans the exponent minimising the weighted
// residual, to validate the eps^{-4} law.
ConstantFit fit_free_exponent(const std::vector<FitPoint>& points, double exp_lo = 1.0,
                              double exp_hi = 8.0);

// --- moderate-deviations regime ---------------------------------------------------
// Estimates P{sup_{[0,eps]} |X| <= (eps/phi(eps))^{1/4}} and reports the
// normalized log-probability per eps together with the slope of -log p
// against phi(eps), which is the finite-eps reading of the limit constant
// (the intercept absorbs pre-asymptotic offsets).
struct ModerateQuery {
  ScoreModel model;
  double radius = 0.0;  // ball radius in the model's own units
};
using ModerateFactory = std::function<ModerateQuery(double eps)>;

struct ModerateRow {
  double epsilon = 0.0;
  double phi = 0.0;
  double radius = 0.0;
  bool phi_ok = true;  // phi(eps) <= |log eps| at this eps
  EstimateRecord estimate;
  double normalized = 0.0;  // log p / phi
};

struct ModerateResult {
  std::vector<ModerateRow> rows;
  double slope_constant = 0.0;  // fitted K in -log p ~ K phi + const
  double slope_se = 0.0;
};

ModerateResult moderate_regime(const ModerateFactory& factory,
                               const std::function<double(double)>& phi,
                               const std::vector<double>& eps_list, std::size_t plain_n,
                               RngStream stream, std::size_t threads = 1);

// --- Chung-style running-infimum diagnostic ----------------------------------------
struct ChungRow {
  double epsilon = 0.0;
  double r_p10 = 0.0, r_p50 = 0.0, r_p90 = 0.0;
  double runinf_p10 = 0.0, runinf_p50 = 0.0, runinf_p90 = 0.0;
};

// times must be sorted ascending; values is count x times.size().
std::vector<ChungRow> chung_statistic(const std::vector<double>& times,
                                      const std::vector<double>& values, std::size_t count,
                                      const std::vector<double>& eps_grid);
std::vector<ChungRow> chung_statistic(const samplers::PathEnsemble& paths,
                                      const std::vector<double>& eps_grid);

// --- min-over-grid experiment --------------------------------------------------------
// Dyadic site count |D_q(m)|; D_q(m) = D(n) for 2^{n/q} <= m < 2^{(n+1)/q},
// |D(n)| = floor(theta 2^n) + 1.
std::size_t dyadic_grid_size(std::size_t m, double q, double theta);

struct MinGridRow {
  std::size_t n = 0;
  double t_n = 0.0;
  double radius_scaled = 0.0;
  std::size_t grid_size = 0;
  EstimateRecord site;   // single-site window probability
  double log_p_min = 0.0;  // product form over independent sites
  double se_log_min = 0.0;
};

struct MinGridResult {
  std::vector<MinGridRow> rows;
  double gamma = 0.0;
  double gamma_max = 0.0;
  double slope = 0.0;  // of log p_min against log n
  double slope_se = 0.0;
  double predicted_exponent = 0.0;  // -(2 lambda (1+alpha)/(pi gamma^4) - q)
};

MinGridResult min_grid_experiment(const std::vector<std::size_t>& n_list, double alpha, double q,
                                  double gamma, double theta, double lambda_hat,
                                  std::size_t window_points, const SplittingConfig& cfg,
                                  RngStream stream, std::size_t threads = 1);

}  // namespace sblab::smallball

#endif
