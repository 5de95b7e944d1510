#include "sblab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sblab/asymptotics.hpp"
#include "sblab/io.hpp"
#include "sblab/kernels.hpp"
#include "sblab/math_util.hpp"
#include "sblab/samplers.hpp"
#include "sblab/smallball.hpp"
#include "sblab/spde.hpp"

namespace sblab::experiments {

using ordered_json = nlohmann::ordered_json;

std::string tool_version() { return "sblab 0.1.0"; }

// --- Config ---------------------------------------------------------------------

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  for (auto& e : entries)
    if (e.section == section && e.key == key) {
      e.value = value;
      return;
    }
  entries.push_back({section, key, value});
}

std::optional<std::string> Config::get(const std::string& section, const std::string& key) const {
  for (const auto& e : entries)
    if (e.section == section && e.key == key) return e.value;
  return std::nullopt;
}

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
  auto v = get("params", key);
  return v ? *v : fallback;
}

std::string Config::require_str(const std::string& key) const {
  auto v = get("params", key);
  if (!v) throw std::invalid_argument("params." + key + ": required parameter missing");
  return *v;
}

double Config::get_num(const std::string& key, double fallback) const {
  auto v = get("params", key);
  if (!v) return fallback;
  try {
    return std::stod(*v);
  } catch (...) {
    throw std::invalid_argument("params." + key + ": not a number: " + *v);
  }
}

std::size_t Config::get_count(const std::string& key, std::size_t fallback) const {
  const double d = get_num(key, static_cast<double>(fallback));
  if (d < 0 || d != std::floor(d))
    throw std::invalid_argument("params." + key + ": not a nonnegative integer");
  return static_cast<std::size_t>(d);
}

std::vector<double> Config::get_list(const std::string& key, const std::string& fallback) const {
  auto v = get("params", key);
  const std::string text = v ? *v : fallback;
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      throw std::invalid_argument("params." + key + ": bad list entry: " + item);
    }
  }
  if (out.empty()) throw std::invalid_argument("params." + key + ": empty list");
  return out;
}

std::string Config::serialize() const {
  std::string out;
  std::string current;
  bool first = true;
  for (const auto& e : entries) {
    if (e.section != current) {
      if (!first) out += "\n";
      out += "[" + e.section + "]\n";
      current = e.section;
      first = false;
    }
    out += e.key + " = " + e.value + "\n";
  }
  return out;
}

Config Config::parse(const std::string& text) {
  Config cfg;
  std::string section = "params";
  std::stringstream ss(text);
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(ss, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value, got: " + line);
    cfg.set(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

// --- manifest -------------------------------------------------------------------

std::string ExperimentManifest::to_json() const {
  ordered_json j;
  j["experiment"] = experiment;
  j["tool"] = tool;
  j["master_seed"] = master_seed;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["config"] = config_text;
  j["outputs"] = ordered_json::array();
  for (const auto& f : outputs) j["outputs"].push_back({{"file", f.name}, {"sha256", f.sha256}});
  return j.dump(2) + "\n";
}

ExperimentManifest ExperimentManifest::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest: cannot open " + path.string());
  ordered_json j = ordered_json::parse(in);
  ExperimentManifest m;
  m.experiment = j.at("experiment").get<std::string>();
  m.tool = j.at("tool").get<std::string>();
  m.master_seed = j.at("master_seed").get<std::uint64_t>();
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  m.config_text = j.at("config").get<std::string>();
  for (const auto& f : j.at("outputs"))
    m.outputs.push_back({f.at("file").get<std::string>(), f.at("sha256").get<std::string>()});
  return m;
}

// --- shared helpers ----------------------------------------------------------------

namespace {

using io::fmt_double;

struct Outputs {
  std::vector<std::pair<std::string, std::string>> files;  // name -> content
  void add(std::string name, std::string content) {
    files.emplace_back(std::move(name), std::move(content));
  }
};

std::string csv(const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    out += header[i];
    out += (i + 1 == header.size()) ? '\n' : ',';
  }
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += row[i];
      out += (i + 1 == row.size()) ? '\n' : ',';
    }
  }
  return out;
}

std::string target_description(const std::string& kind) {
  static const std::map<std::string, std::string> table = {
      {"recursion", "growth a_n ~ (c n / 4)^4 of the recursion a_{n+1} = a_n + c a_n^{3/4}"},
      {"entropy", "covering count N(eps) <= C / eps for the auxiliary process metric"},
      {"d_bound", "canonical-distance bound d(s,t) <= c |t-s|^{1/4} min(1, (|t-s|/(s^t))^{3/4})"},
      {"hz_gap", "variance gap Var(H - Z)(t) <= 5t between free-space and torus solutions"},
      {"decomposition_check",
       "three-kernel identity c (cov_H + cov_T) = cov_F and the coupled H sampler law"},
      {"lambda_fit", "small-ball constant from -log P{sup |X| <= eps} ~ lambda eps^{-exponent}"},
      {"prop_H_constant", "eps^4 log P{sup_{[0,1]}|H| <= eps} -> -(2 lambda / pi)"},
      {"prop_Z_constant",
       "moderate-regime constant of Z matches the H constant 2 lambda / pi"},
      {"theorem_u",
       "moderate-regime constant -(2 lambda / pi) sigma(u0(x))^4 for the nonlinear field"},
      {"localization_rate",
       "sup |E| / (sqrt(t) log(1/t)) tight in t; sub-exponential pointwise tails"},
      {"chung_diagnostic",
       "running infimum of sup_{[0,eps]}|H| / psi(eps) against the (2 lambda / pi)^{1/4} level"},
      {"min_grid",
       "log P{min over dyadic sites of the windowed sup <= gamma psi(t_n)} / log n exponent"},
      {"sample", "path ensemble export"},
      {"estimate", "small-ball probability estimate"},
  };
  auto it = table.find(kind);
  return it == table.end() ? "unspecified" : it->second;
}

smallball::SplittingConfig splitting_from(const Config& cfg) {
  smallball::SplittingConfig sc;
  sc.particles = cfg.get_count("particles", 400);
  sc.kill_fraction = cfg.get_num("kill_fraction", 0.25);
  sc.pcn_beta = cfg.get_num("pcn_beta", 0.3);
  sc.rejuvenation_sweeps = cfg.get_count("rejuvenation_sweeps", 2);
  sc.repetitions = cfg.get_count("repetitions", 10);
  return sc;
}

std::vector<std::string> estimate_row(double eps, const smallball::EstimateRecord& rec) {
  return {fmt_double(eps),        fmt_double(rec.p_hat), fmt_double(rec.ci_lo),
          fmt_double(rec.ci_hi),  fmt_double(rec.log_p), rec.method,
          std::to_string(rec.cost)};
}

const std::vector<std::string> kEstimateHeader = {"epsilon", "p_hat", "ci_lo", "ci_hi",
                                                  "log_p",   "method", "cost"};

ordered_json estimate_json(const smallball::EstimateRecord& rec) {
  ordered_json j;
  j["p_hat"] = rec.p_hat;
  j["log_p"] = std::isfinite(rec.log_p) ? ordered_json(rec.log_p) : ordered_json("-inf");
  j["ci_lo"] = rec.ci_lo;
  j["ci_hi"] = rec.ci_hi;
  j["method"] = rec.method;
  j["n_effective"] = rec.n_effective;
  j["cost"] = rec.cost;
  return j;
}

double phi_loglog(double eps) { return std::log(std::abs(std::log(eps))); }

// --- handlers -----------------------------------------------------------------------

Outputs run_recursion(const Config& cfg, RngStream) {
  const auto c_list = cfg.get_list("c_list", "0.5,1,4");
  const std::size_t n = cfg.get_count("n", 1000000);
  const auto trend = cfg.get_list("trend_n", "1000,10000,100000,1000000");

  ordered_json j;
  j["target"] = target_description("recursion");
  j["rows"] = ordered_json::array();
  std::string md = "# recursion\n\n| c | n | ratio |\n|---|---|---|\n";
  for (double c : c_list) {
    ordered_json row;
    row["c"] = c;
    row["trend"] = ordered_json::array();
    for (double tn : trend) {
      const auto res = asymptotics::recursion_ratio(c, static_cast<std::size_t>(tn));
      row["trend"].push_back({{"n", res.n}, {"ratio", res.ratio}});
    }
    const auto fin = asymptotics::recursion_ratio(c, n);
    row["n"] = fin.n;
    row["ratio"] = fin.ratio;
    j["rows"].push_back(row);
    md += "| " + fmt_double(c) + " | " + std::to_string(fin.n) + " | " + fmt_double(fin.ratio) +
          " |\n";
  }
  Outputs out;
  out.add("recursion.json", j.dump(2) + "\n");
  out.add("summary.md", md);
  return out;
}

Outputs run_entropy(const Config& cfg, RngStream stream) {
  const std::size_t pow_lo = cfg.get_count("pow_lo", 3);
  const std::size_t pow_hi = cfg.get_count("pow_hi", 10);
  const std::size_t pairs = cfg.get_count("d_pairs", 10000);
  const double kappa = cfg.get_num("kappa", kernels::kappa_spectral());

  const auto dfit = asymptotics::verify_d_interpolation(pairs, stream, kappa);
  ordered_json j;
  j["target"] = target_description("entropy");
  j["fitted_c"] = dfit.c;
  j["rows"] = ordered_json::array();
  std::string md = "# entropy cover\n\n| eps | count | count*eps |\n|---|---|---|\n";
  std::vector<std::size_t> counts;
  for (std::size_t p = pow_lo; p <= pow_hi; ++p) {
    const double eps = std::pow(2.0, -static_cast<double>(p));
    const auto cover = asymptotics::build_entropy_cover(eps, dfit.c, kappa);
    counts.push_back(cover.count);
    j["rows"].push_back({{"eps", eps},
                         {"count", cover.count},
                         {"count_times_eps", cover.count * eps},
                         {"max_pair_distance", cover.max_pair_distance}});
    md += "| " + fmt_double(eps) + " | " + std::to_string(cover.count) + " | " +
          fmt_double(cover.count * eps) + " |\n";
  }
  j["doubling_ratios"] = ordered_json::array();
  for (std::size_t i = 0; i + 1 < counts.size(); ++i)
    j["doubling_ratios"].push_back(static_cast<double>(counts[i + 1]) /
                                   static_cast<double>(counts[i]));
  Outputs out;
  out.add("entropy.json", j.dump(2) + "\n");
  out.add("summary.md", md);
  return out;
}

Outputs run_d_bound(const Config& cfg, RngStream stream) {
  const std::size_t pairs = cfg.get_count("pairs", 10000);
  const double kappa = cfg.get_num("kappa", kernels::kappa_spectral());
  const auto f1 = asymptotics::verify_d_interpolation(pairs, stream.child(1), kappa);
  const auto f2 = asymptotics::verify_d_interpolation(pairs, stream.child(2), kappa);
  ordered_json j;
  j["target"] = target_description("d_bound");
  j["c_run1"] = f1.c;
  j["c_run2"] = f2.c;
  j["rel_diff"] = std::abs(f1.c - f2.c) / f1.c;
  j["violations"] = f1.violations + f2.violations;
  j["c_eta"] = ordered_json::object();
  for (const auto& [eta, ce] : f1.c_eta) j["c_eta"][fmt_double(eta)] = ce;
  Outputs out;
  out.add("d_bound.json", j.dump(2) + "\n");
  out.add("summary.md",
          "# d bound\n\nfitted c = " + fmt_double(f1.c) +
              ", stability rel diff = " + fmt_double(j["rel_diff"].get<double>()) + "\n");
  return out;
}

Outputs run_hz_gap(const Config& cfg, RngStream) {
  const auto t_list = cfg.get_list("t_list", "0.01,0.1,1");
  std::vector<std::vector<std::string>> rows;
  ordered_json j;
  j["target"] = target_description("hz_gap");
  j["rows"] = ordered_json::array();
  for (double t : t_list) {
    if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("params.t_list: t must be in (0,1]");
    const double gap = kernels::variance_gap_hz(t);
    const double ratio = gap / (5.0 * t);
    rows.push_back({fmt_double(t), fmt_double(gap), fmt_double(5.0 * t), fmt_double(ratio)});
    j["rows"].push_back({{"t", t}, {"var_gap", gap}, {"bound", 5.0 * t}, {"ratio", ratio}});
    if (ratio > 1.0)
      throw std::runtime_error("hz_gap: Var(H-Z)(t) exceeded 5t at t = " + fmt_double(t) +
                               "; this flags a kernel bug");
  }
  Outputs out;
  out.add("hz_gap.csv", csv({"t", "var_gap", "bound", "ratio"}, rows));
  out.add("hz_gap.json", j.dump(2) + "\n");
  out.add("summary.md", "# hz gap\n\nall ratios within the 5t bound\n");
  return out;
}

Outputs run_decomposition(const Config& cfg, RngStream stream) {
  const std::size_t grid_n = cfg.get_count("grid_n", 64);
  const std::size_t coupled_n = cfg.get_count("coupled_grid", 64);
  const std::size_t coupled_paths = cfg.get_count("coupled_paths", 20000);

  const auto fit = kernels::fit_decomposition(grid_n);

  samplers::TimeGrid grid{coupled_n, 0.0, 1.0};
  const auto f_ens = samplers::sample_fbm14(grid, coupled_paths, stream.child(1));
  const auto t_kernel = kernels::make_kernel(kernels::ProcessId::TAux, 1.0, fit.kappa);
  const auto t_ens = samplers::sample_gaussian_path(t_kernel, grid, coupled_paths, stream.child(2));
  const auto h_ens = samplers::coupled_h_from_f_t(f_ens, t_ens, fit.path_scale, fit.kappa);

  samplers::CovAccumulator acc(grid.n);
  for (std::size_t p = 0; p < h_ens.count; ++p) acc.add(h_ens.path(p));
  const auto target = kernels::covariance_matrix(
      kernels::make_kernel(kernels::ProcessId::HFree), grid.points());
  const double max_z = acc.max_z(target);

  ordered_json j;
  j["target"] = target_description("decomposition_check");
  j["kappa"] = fit.kappa;
  j["cov_scale"] = fit.cov_scale;
  j["path_scale"] = fit.path_scale;
  j["max_residual"] = fit.max_residual;
  j["residual_ok"] = fit.max_residual < 1e-9;
  j["kappa_rel_dev_from_spectral"] = fit.kappa_vs_spectral;
  j["path_scale_rel_dev_from_quarter_root_two_over_pi"] = fit.scale_vs_quarter_root;
  j["coupled_paths"] = coupled_paths;
  j["coupled_max_z"] = max_z;
  Outputs out;
  out.add("decomposition.json", j.dump(2) + "\n");
  out.add("summary.md", "# decomposition\n\nkappa = " + fmt_double(fit.kappa) +
                            ", cov scale = " + fmt_double(fit.cov_scale) +
                            ", max residual = " + fmt_double(fit.max_residual) +
                            ", coupled max z = " + fmt_double(max_z) + "\n");
  return out;
}

smallball::ScoreModel model_for_process(const std::string& process, const samplers::TimeGrid& grid,
                                        double window_lo, double window_hi, double kappa,
                                        std::size_t modes) {
  if (process == "BM") return smallball::make_bm_score(grid, window_lo, window_hi);
  if (process == "F_fbm14") return smallball::make_fbm_score(grid, window_lo, window_hi);
  if (process == "H_free")
    return smallball::make_cov_score([](double s, double t) { return kernels::cov_h_free(s, t); },
                                     grid, window_lo, window_hi);
  if (process == "T_aux")
    return smallball::make_cov_score(
        [kappa](double s, double t) { return kernels::cov_t_aux(s, t, kappa); }, grid, window_lo,
        window_hi);
  if (process == "Z_torus") return smallball::make_z0_score(grid, modes);
  throw std::invalid_argument("params.process: unknown process: " + process);
}

Outputs run_lambda_fit(const Config& cfg, RngStream stream, std::size_t threads) {
  const std::string process = cfg.get_str("process", "BM");
  const double default_exp = process == "BM" ? 2.0 : 4.0;
  const double exponent = cfg.get_num("exponent", default_exp);
  const auto eps_list =
      cfg.get_list("eps_list", process == "BM" ? "0.3,0.25,0.2,0.15" : "0.35,0.3,0.25,0.2");
  const std::size_t grid_n = cfg.get_count("grid_n", process == "BM" ? 8193 : 1025);
  const bool refine = cfg.get_num("refine", 1.0) != 0.0;
  const auto sc = splitting_from(cfg);

  samplers::TimeGrid grid{grid_n, 0.0, 1.0};
  auto model = model_for_process(process, grid, 0.0, 1.0, kernels::kappa_spectral(),
                                 cfg.get_count("modes", 2048));

  std::vector<std::vector<std::string>> rows;
  std::vector<smallball::FitPoint> points;
  ordered_json refinement = ordered_json::array();
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    const double eps = eps_list[i];
    const auto rec = smallball::estimate_splitting(model, eps, sc, stream.child(1, i), threads);
    rows.push_back(estimate_row(eps, rec));
    if (rec.p_hat > 0.0) points.push_back(smallball::fit_point(eps, rec));
    if (refine) {
      samplers::TimeGrid fine{2 * (grid_n - 1) + 1, 0.0, 1.0};
      auto fine_model = model_for_process(process, fine, 0.0, 1.0, kernels::kappa_spectral(),
                                          cfg.get_count("modes", 2048));
      const auto fine_rec =
          smallball::estimate_splitting(fine_model, eps, sc, stream.child(2, i), threads);
      const double rel =
          std::abs(fine_rec.log_p - rec.log_p) / std::max(1e-12, std::abs(rec.log_p));
      refinement.push_back({{"eps", eps},
                            {"log_p", rec.log_p},
                            {"log_p_refined", fine_rec.log_p},
                            {"rel_change", rel},
                            {"stable_2pct", rel < 0.02}});
    }
  }

  const auto fit = smallball::fit_constant(points, exponent);
  const auto free_fit = smallball::fit_free_exponent(points);

  ordered_json j;
  j["target"] = target_description("lambda_fit");
  j["process"] = process;
  j["lambda_hat"] = fit.lambda_hat;
  j["stderr"] = fit.stderr_lambda;
  j["exponent"] = fit.exponent;
  j["intercept"] = fit.intercept;
  j["epsilons"] = fit.epsilons;
  j["free_exponent"] = {{"exponent", free_fit.exponent},
                        {"lambda_hat", free_fit.lambda_hat},
                        {"stderr", free_fit.stderr_lambda}};
  if (refine) j["grid_refinement"] = refinement;
  j["grid_n"] = grid_n;

  Outputs out;
  out.add("estimates.csv", csv(kEstimateHeader, rows));
  out.add("fit.json", j.dump(2) + "\n");
  out.add("summary.md", "# lambda fit (" + process + ")\n\nlambda_hat = " +
                            fmt_double(fit.lambda_hat) + " +- " + fmt_double(fit.stderr_lambda) +
                            " at exponent " + fmt_double(fit.exponent) + "\n");
  return out;
}

Outputs run_prop_h_constant(const Config& cfg, RngStream stream, std::size_t threads) {
  Config sub = cfg;
  sub.set("params", "process", "H_free");
  sub.set("params", "exponent", "4");
  if (!cfg.get("params", "eps_list")) sub.set("params", "eps_list", "0.5,0.45,0.4,0.35");
  if (!cfg.get("params", "grid_n")) sub.set("params", "grid_n", "257");
  Outputs out = run_lambda_fit(sub, stream, threads);
  for (auto& [name, content] : out.files) {
    if (name == "fit.json") {
      ordered_json j = ordered_json::parse(content);
      j["target"] = target_description("prop_H_constant");
      const double slope = j["lambda_hat"].get<double>();
      j["h_constant"] = slope;  // estimate of 2 lambda / pi
      j["lambda_implied"] = slope * kPi / 2.0;
      content = j.dump(2) + "\n";
    }
  }
  return out;
}

Outputs run_prop_z_constant(const Config& cfg, RngStream stream, std::size_t threads) {
  const auto eps_list = cfg.get_list("eps_list", "1e-2,1e-3");
  const std::size_t plain_n = cfg.get_count("plain_n", 40000);
  const std::size_t grid_n = cfg.get_count("grid_n", 129);
  const std::size_t modes = cfg.get_count("modes", 2048);

  smallball::ModerateFactory z_factory = [&](double eps) {
    smallball::ModerateQuery q;
    samplers::TimeGrid g{grid_n, 0.0, eps};
    q.model = smallball::make_z0_score(g, modes);
    q.radius = std::pow(eps / phi_loglog(eps), 0.25);
    return q;
  };
  smallball::ModerateFactory h_factory = [&](double eps) {
    // Exact scaling reduction: sup on [0,eps] against r equals sup on [0,1]
    // against r eps^{-1/4} on the similarly scaled grid.
    smallball::ModerateQuery q;
    samplers::TimeGrid g{grid_n, 0.0, 1.0};
    q.model = smallball::make_cov_score(
        [](double s, double t) { return kernels::cov_h_free(s, t); }, g, 0.0, 1.0);
    q.radius = std::pow(1.0 / phi_loglog(eps), 0.25);
    return q;
  };

  const auto z_res =
      smallball::moderate_regime(z_factory, phi_loglog, eps_list, plain_n, stream.child(1), threads);
  const auto h_res =
      smallball::moderate_regime(h_factory, phi_loglog, eps_list, plain_n, stream.child(2), threads);

  std::vector<std::vector<std::string>> rows;
  for (const auto& r : z_res.rows)
    rows.push_back({"Z_torus", fmt_double(r.epsilon), fmt_double(r.phi), fmt_double(r.radius),
                    fmt_double(r.estimate.log_p), fmt_double(r.normalized),
                    r.phi_ok ? "ok" : "phi_warning"});
  for (const auto& r : h_res.rows)
    rows.push_back({"H_free", fmt_double(r.epsilon), fmt_double(r.phi), fmt_double(r.radius),
                    fmt_double(r.estimate.log_p), fmt_double(r.normalized),
                    r.phi_ok ? "ok" : "phi_warning"});

  const double diff = std::abs(z_res.slope_constant - h_res.slope_constant);
  const double joint = 1.96 * std::hypot(z_res.slope_se, h_res.slope_se);

  ordered_json j;
  j["target"] = target_description("prop_Z_constant");
  j["z_constant"] = z_res.slope_constant;
  j["z_se"] = z_res.slope_se;
  j["h_constant"] = h_res.slope_constant;
  j["h_se"] = h_res.slope_se;
  j["agree_within_joint_ci"] = diff <= joint;
  Outputs out;
  out.add("moderate.csv",
          csv({"process", "epsilon", "phi", "radius", "log_p", "normalized", "phi_check"}, rows));
  out.add("prop_z.json", j.dump(2) + "\n");
  out.add("summary.md", "# moderate-regime constants\n\nZ: " + fmt_double(z_res.slope_constant) +
                            ", H: " + fmt_double(h_res.slope_constant) + "\n");
  return out;
}

Outputs run_theorem_u(const Config& cfg, RngStream stream, std::size_t threads) {
  const auto sigmas = cfg.get_list("sigmas", "1,2");
  const auto eps_list = cfg.get_list("eps_list", "1e-2,3e-3");
  const std::size_t m = cfg.get_count("m", 64);
  const double dt_frac = cfg.get_num("dt_frac", 0.25);
  const std::size_t plain_n = cfg.get_count("plain_n", 20000);

  ordered_json j;
  j["target"] = target_description("theorem_u");
  j["per_sigma"] = ordered_json::array();
  std::vector<std::vector<std::string>> rows;
  std::vector<double> slopes, slope_ses;
  for (std::size_t si = 0; si < sigmas.size(); ++si) {
    const double sig = sigmas[si];
    smallball::ModerateFactory factory = [&, sig](double eps) {
      spde::SpdeConfig sc;
      sc.m = m;
      const double h = 2.0 / static_cast<double>(m);
      sc.dt = dt_frac * h * h;
      sc.horizon = eps;
      sc.sigma = [sig](double) { return sig; };
      sc.u0 = [](double) { return 0.0; };
      sc.scheme = spde::Scheme::SemiImplicit;
      smallball::ModerateQuery q;
      q.model = smallball::make_spde_score(sc, 0, true);
      q.radius = std::pow(eps / phi_loglog(eps), 0.25);
      return q;
    };
    const auto res = smallball::moderate_regime(factory, phi_loglog, eps_list, plain_n,
                                                stream.child(si), threads);
    for (const auto& r : res.rows)
      rows.push_back({fmt_double(sig), fmt_double(r.epsilon), fmt_double(r.phi),
                      fmt_double(r.radius), fmt_double(r.estimate.log_p),
                      fmt_double(r.normalized)});
    slopes.push_back(res.slope_constant);
    slope_ses.push_back(res.slope_se);
    j["per_sigma"].push_back(
        {{"sigma", sig}, {"constant", res.slope_constant}, {"se", res.slope_se}});
  }
  if (sigmas.size() >= 2) {
    const double expect = std::pow(sigmas[1] / sigmas[0], 4.0);
    j["scaling_ratio"] = slopes[1] / slopes[0];
    j["scaling_expected"] = expect;
  }
  Outputs out;
  out.add("theorem_u.csv", csv({"sigma", "epsilon", "phi", "radius", "log_p", "normalized"}, rows));
  out.add("theorem_u.json", j.dump(2) + "\n");
  out.add("summary.md", "# nonlinear moderate regime\n\nsee theorem_u.json\n");
  return out;
}

Outputs run_localization(const Config& cfg, RngStream stream, std::size_t threads) {
  const std::size_t m = cfg.get_count("m", 256);
  const double dt_frac = cfg.get_num("dt_frac", 0.25);
  const auto t_list = cfg.get_list("t_list", "1e-2,1e-3");
  const std::size_t replicas = cfg.get_count("replicas", 200);

  spde::SpdeConfig sc;
  sc.m = m;
  const double h = 2.0 / static_cast<double>(m);
  sc.dt = dt_frac * h * h;
  sc.horizon = *std::max_element(t_list.begin(), t_list.end());
  sc.sigma = [](double v) { return std::cos(v); };
  sc.u0 = [](double x) { return std::sin(kPi * x); };
  sc.scheme = spde::Scheme::SemiImplicit;

  const auto table = spde::error_rate_study(sc, t_list, replicas, stream, threads);
  std::vector<std::vector<std::string>> rows;
  ordered_json j;
  j["target"] = target_description("localization_rate");
  j["rows"] = ordered_json::array();
  for (const auto& r : table) {
    rows.push_back({fmt_double(r.t), fmt_double(r.median_ratio), fmt_double(r.q90_ratio),
                    fmt_double(r.max_ratio), fmt_double(r.tail_slope)});
    j["rows"].push_back({{"t", r.t},
                         {"median_ratio", r.median_ratio},
                         {"q90_ratio", r.q90_ratio},
                         {"max_ratio", r.max_ratio},
                         {"tail_slope", r.tail_slope}});
  }
  if (table.size() >= 2)
    j["median_stability"] = table.front().median_ratio / table.back().median_ratio;
  Outputs out;
  out.add("localization.csv",
          csv({"t", "median_ratio", "q90_ratio", "max_ratio", "tail_slope"}, rows));
  out.add("localization.json", j.dump(2) + "\n");
  out.add("summary.md", "# linearization error rates\n\nsee localization.csv\n");
  return out;
}

Outputs run_chung(const Config& cfg, RngStream stream, std::size_t) {
  const std::size_t count = cfg.get_count("count", 400);
  const double alpha = cfg.get_num("alpha", 0.25);
  const std::size_t n_max = cfg.get_count("n_max", 11);
  const double grid_min = cfg.get_num("grid_min", 5e-10);
  const std::size_t per_decade = cfg.get_count("grid_per_decade", 24);
  const double lambda_ref = cfg.get_num("lambda_hat", 1.0);
  if (n_max < 8) throw std::invalid_argument("params.n_max: need >= 8 for the eps grid");

  std::vector<double> eps_grid;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double t = std::exp(-std::pow(static_cast<double>(n), 1.0 + alpha));
    if (t < 2.0 * grid_min) break;
    eps_grid.push_back(t);
  }
  const double decades = std::log10(1.0 / grid_min);
  const std::size_t nt = static_cast<std::size_t>(decades * per_decade);
  std::vector<double> times(nt);
  for (std::size_t i = 0; i < nt; ++i)
    times[i] = grid_min * std::pow(1.0 / grid_min,
                                   static_cast<double>(i + 1) / static_cast<double>(nt));

  samplers::HSpectralSampler sampler(times);
  const auto values = samplers::sample_h_spectral(sampler, count, stream);
  const auto table = smallball::chung_statistic(times, values, count, eps_grid);

  std::vector<std::vector<std::string>> rows;
  for (const auto& r : table)
    rows.push_back({fmt_double(r.epsilon), fmt_double(r.r_p10), fmt_double(r.r_p50),
                    fmt_double(r.r_p90), fmt_double(r.runinf_p10), fmt_double(r.runinf_p50),
                    fmt_double(r.runinf_p90)});
  ordered_json j;
  j["target"] = target_description("chung_diagnostic");
  j["reference_level"] = std::pow(2.0 * lambda_ref / kPi, 0.25);
  j["sampler_variance_rel_error"] = sampler.max_variance_rel_error();
  j["note"] =
      "running infimum of the normalized sup; the iterated-logarithm limit itself is not "
      "reachable at finite resolution and no numerical acceptance is imposed on it";
  Outputs out;
  out.add("chung.csv",
          csv({"epsilon", "r_p10", "r_p50", "r_p90", "runinf_p10", "runinf_p50", "runinf_p90"},
              rows));
  out.add("chung.json", j.dump(2) + "\n");
  out.add("summary.md", "# running-infimum diagnostic\n\nsee chung.csv\n");
  return out;
}

Outputs run_min_grid(const Config& cfg, RngStream stream, std::size_t threads) {
  const auto n_list_d = cfg.get_list("n_list", "10,20,40");
  std::vector<std::size_t> n_list;
  for (double v : n_list_d) n_list.push_back(static_cast<std::size_t>(v));
  const double alpha = cfg.get_num("alpha", 0.5);
  const double q = cfg.get_num("q", 1.0);
  const double theta = cfg.get_num("theta", 1.0);
  const double lambda_hat = cfg.get_num("lambda_hat", 1.0);
  const double gamma_max = std::pow(2.0 * lambda_hat * (1.0 + alpha) / (kPi * q), 0.25);
  const double gamma = cfg.get_num("gamma", cfg.get_num("gamma_frac", 0.6) * gamma_max);
  const std::size_t window_points = cfg.get_count("window_points", 96);
  auto sc = splitting_from(cfg);

  const auto res = smallball::min_grid_experiment(n_list, alpha, q, gamma, theta, lambda_hat,
                                                  window_points, sc, stream, threads);
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : res.rows)
    rows.push_back({std::to_string(r.n), fmt_double(r.t_n), fmt_double(r.radius_scaled),
                    std::to_string(r.grid_size), fmt_double(r.site.p_hat),
                    fmt_double(r.site.ci_lo), fmt_double(r.site.ci_hi), fmt_double(r.log_p_min)});
  ordered_json j;
  j["target"] = target_description("min_grid");
  j["gamma"] = res.gamma;
  j["gamma_max"] = res.gamma_max;
  j["slope"] = res.slope;
  j["slope_se"] = res.slope_se;
  j["predicted_exponent"] = res.predicted_exponent;
  j["rel_dev_from_prediction"] =
      std::abs(res.slope - res.predicted_exponent) / std::abs(res.predicted_exponent);
  Outputs out;
  out.add("min_grid.csv",
          csv({"n", "t_n", "radius_scaled", "grid_size", "p_site", "ci_lo", "ci_hi", "log_p_min"},
              rows));
  out.add("min_grid.json", j.dump(2) + "\n");
  out.add("summary.md", "# min-grid exponent\n\nslope = " + fmt_double(res.slope) +
                            ", predicted = " + fmt_double(res.predicted_exponent) + "\n");
  return out;
}

Outputs run_sample(const Config& cfg, RngStream stream) {
  const std::string process = cfg.get_str("process", "F_fbm14");
  const std::size_t grid_n = cfg.get_count("grid_n", 129);
  const double horizon = cfg.get_num("horizon", 1.0);
  const std::size_t count = cfg.get_count("count", 8);
  const std::string kernel_only = cfg.get_str("kernel_table", "0");
  samplers::TimeGrid grid{grid_n, 0.0, horizon};

  Outputs out;
  if (kernel_only != "0") {
    const double kappa = cfg.get_num("kappa", kernels::kappa_spectral());
    kernels::ProcessId id;
    if (process == "BM") id = kernels::ProcessId::Bm;
    else if (process == "F_fbm14") id = kernels::ProcessId::Ffbm14;
    else if (process == "H_free") id = kernels::ProcessId::HFree;
    else if (process == "T_aux") id = kernels::ProcessId::TAux;
    else if (process == "Z_torus") id = kernels::ProcessId::ZTorus;
    else throw std::invalid_argument("params.process: unknown process: " + process);
    const auto kernel = kernels::make_kernel(id, horizon, kappa, cfg.get_count("modes", 4096));
    const auto ts = grid.points();
    std::vector<std::vector<std::string>> rows;
    for (double s : ts)
      for (double t : ts)
        rows.push_back({fmt_double(s), fmt_double(t), fmt_double(kernel.eval(s, t))});
    out.add("kernel.csv", csv({"s", "t", "value"}, rows));
    out.add("summary.md", "# kernel table (" + process + ")\n");
    return out;
  }

  samplers::PathEnsemble ens;
  if (process == "F_fbm14") {
    ens = samplers::sample_fbm14(grid, count, stream);
  } else if (process == "Z_torus") {
    const auto st = samplers::sample_z_torus(grid, cfg.get_count("xgrid", 1),
                                             cfg.get_count("modes", 1024), count, stream);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t p = 0; p < st.count; ++p)
      for (std::size_t ti = 0; ti < st.tgrid.n; ++ti)
        for (std::size_t xi = 0; xi < st.x_points.size(); ++xi)
          rows.push_back({std::to_string(p), std::to_string(ti), std::to_string(xi),
                          fmt_double(st.at(p, ti, xi))});
    out.add("ensemble.csv", csv({"path_id", "t_index", "x_index", "value"}, rows));
    out.add("summary.md", "# ensemble (Z_torus)\n");
    return out;
  } else {
    const double kappa = cfg.get_num("kappa", kernels::kappa_spectral());
    kernels::ProcessId id;
    if (process == "BM") id = kernels::ProcessId::Bm;
    else if (process == "H_free") id = kernels::ProcessId::HFree;
    else if (process == "T_aux") id = kernels::ProcessId::TAux;
    else throw std::invalid_argument("params.process: unknown process: " + process);
    ens = samplers::sample_gaussian_path(kernels::make_kernel(id, horizon, kappa), grid, count,
                                         stream);
  }
  std::vector<std::vector<std::string>> rows;
  for (std::size_t p = 0; p < ens.count; ++p) {
    const auto path = ens.path(p);
    for (std::size_t ti = 0; ti < ens.grid.n; ++ti)
      rows.push_back({std::to_string(p), std::to_string(ti), fmt_double(path[ti])});
  }
  out.add("ensemble.csv", csv({"path_id", "t_index", "value"}, rows));
  out.add("summary.md", "# ensemble (" + process + ")\n");
  return out;
}

Outputs run_estimate(const Config& cfg, RngStream stream, std::size_t threads) {
  const std::string process = cfg.get_str("process", "BM");
  const double epsilon = cfg.get_num("epsilon", 0.5);
  const double window_lo = cfg.get_num("window_lo", 0.0);
  const double window_hi = cfg.get_num("window_hi", 1.0);
  const std::size_t grid_n = cfg.get_count("grid_n", 513);
  const std::string method = cfg.get_str("method", "splitting");

  samplers::TimeGrid grid{grid_n, 0.0, cfg.get_num("horizon", window_hi)};
  auto model = model_for_process(process, grid, window_lo, window_hi,
                                 cfg.get_num("kappa", kernels::kappa_spectral()),
                                 cfg.get_count("modes", 1024));
  smallball::EstimateRecord rec;
  if (method == "plain") {
    rec = smallball::estimate_plain(model, epsilon, cfg.get_count("n", 100000), stream, threads);
  } else if (method == "splitting") {
    rec = smallball::estimate_splitting(model, epsilon, splitting_from(cfg), stream, threads);
  } else {
    throw std::invalid_argument("params.method: must be plain or splitting");
  }
  ordered_json j = estimate_json(rec);
  j["target"] = target_description("estimate");
  j["process"] = process;
  j["epsilon"] = epsilon;
  Outputs out;
  out.add("estimate.csv", csv(kEstimateHeader, {estimate_row(epsilon, rec)}));
  out.add("estimate.json", j.dump(2) + "\n");
  out.add("summary.md", "# estimate\n\np_hat = " + fmt_double(rec.p_hat) + "\n");
  return out;
}

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

}  // namespace

RunResult run(const Config& config, std::uint64_t seed, std::size_t threads,
              const std::filesystem::path& out_root, std::string stamp) {
  const auto kind_opt = config.get("experiment", "kind");
  if (!kind_opt) throw std::invalid_argument("experiment.kind: required parameter missing");
  const std::string kind = *kind_opt;

  ExperimentManifest manifest;
  manifest.experiment = kind;
  manifest.tool = tool_version();
  manifest.master_seed = seed;
  manifest.config_text = config.serialize();
  manifest.started_at = now_utc();

  RngStream stream{seed, 0};
  Outputs outputs;
  if (kind == "recursion") outputs = run_recursion(config, stream);
  else if (kind == "entropy") outputs = run_entropy(config, stream);
  else if (kind == "d_bound") outputs = run_d_bound(config, stream);
  else if (kind == "hz_gap") outputs = run_hz_gap(config, stream);
  else if (kind == "decomposition_check") outputs = run_decomposition(config, stream);
  else if (kind == "lambda_fit") outputs = run_lambda_fit(config, stream, threads);
  else if (kind == "prop_H_constant") outputs = run_prop_h_constant(config, stream, threads);
  else if (kind == "prop_Z_constant") outputs = run_prop_z_constant(config, stream, threads);
  else if (kind == "theorem_u") outputs = run_theorem_u(config, stream, threads);
  else if (kind == "localization_rate") outputs = run_localization(config, stream, threads);
  else if (kind == "chung_diagnostic") outputs = run_chung(config, stream, threads);
  else if (kind == "min_grid") outputs = run_min_grid(config, stream, threads);
  else if (kind == "sample") outputs = run_sample(config, stream);
  else if (kind == "estimate") outputs = run_estimate(config, stream, threads);
  else throw std::invalid_argument("experiment.kind: unknown kind: " + kind);

  if (stamp.empty()) stamp = now_utc();
  std::filesystem::path dir = out_root / kind / stamp;
  for (int suffix = 1; std::filesystem::exists(dir); ++suffix)
    dir = out_root / kind / (stamp + "-" + std::to_string(suffix));
  std::filesystem::create_directories(dir);

  for (const auto& [name, content] : outputs.files) {
    io::atomic_write_text(dir / name, content);
    manifest.outputs.push_back({name, io::sha256_hex(content)});
  }
  manifest.finished_at = now_utc();
  io::atomic_write_text(dir / "manifest.json", manifest.to_json());

  return RunResult{dir, manifest};
}

RerunReport rerun(const std::filesystem::path& manifest_path, std::size_t threads,
                  const std::filesystem::path& out_root) {
  const auto manifest = ExperimentManifest::from_json_file(manifest_path);
  const Config config = Config::parse(manifest.config_text);
  const auto result = run(config, manifest.master_seed, threads, out_root);

  RerunReport report;
  report.new_dir = result.dir;
  report.all_match = true;
  std::map<std::string, std::string> fresh;
  for (const auto& f : result.manifest.outputs) fresh[f.name] = f.sha256;
  for (const auto& f : manifest.outputs) {
    const bool ok = fresh.count(f.name) > 0 && fresh[f.name] == f.sha256;
    report.files.push_back({f.name, ok});
    report.all_match = report.all_match && ok;
  }
  return report;
}

}  // namespace sblab::experiments
