#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sblab/experiments.hpp"
#include "sblab/threading.hpp"

namespace {

using sblab::experiments::Config;

struct GlobalOpts {
  std::uint64_t seed = 12345;
  std::size_t threads = sblab::default_threads();
  std::string out = "results";
  std::string config_file;
  std::string stamp;
};

// key=value pairs given on the command line land in [params].
void apply_overrides(Config& cfg, const std::vector<std::string>& sets) {
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--set expects key=value, got: " + kv);
    cfg.set("params", kv.substr(0, eq), kv.substr(eq + 1));
  }
}

int execute(const GlobalOpts& g, Config cfg, const std::string& kind) {
  if (!g.config_file.empty()) {
    Config from_file = Config::load(g.config_file);
    for (const auto& e : from_file.entries) cfg.set(e.section, e.key, e.value);
  }
  if (!cfg.get("experiment", "kind")) cfg.set("experiment", "kind", kind);
  const auto result = sblab::experiments::run(cfg, g.seed, g.threads, g.out, g.stamp);
  std::printf("wrote %s\n", result.dir.string().c_str());
  for (const auto& f : result.manifest.outputs)
    std::printf("  %s  %s\n", f.sha256.c_str(), f.name.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"small-ball laboratory for the stochastic heat equation"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--threads", g.threads, "worker threads (never changes results)");
  app.add_option("--out", g.out, "output root directory");
  app.add_option("--config", g.config_file, "key = value config file (sections)");
  app.add_option("--stamp", g.stamp, "fixed run directory name instead of a timestamp");

  std::vector<std::string> sets;
  app.add_option("--set", sets, "override params, key=value (repeatable)");

  auto* sample = app.add_subcommand("sample", "draw a path ensemble (or a kernel table)");
  std::string sample_process = "F_fbm14";
  sample->add_option("--process", sample_process, "BM|F_fbm14|H_free|T_aux|Z_torus");
  std::size_t sample_n = 129, sample_count = 8;
  bool kernel_table = false;
  sample->add_option("--n", sample_n, "grid points");
  sample->add_option("--count", sample_count, "paths");
  sample->add_flag("--kernel", kernel_table, "export kernel values (s,t,value) instead of paths");

  auto* estimate = app.add_subcommand("estimate", "estimate one small-ball probability");
  std::string est_process = "BM", est_method = "splitting";
  double est_eps = 0.5;
  estimate->add_option("--process", est_process, "BM|F_fbm14|H_free|T_aux|Z_torus");
  estimate->add_option("--epsilon", est_eps, "ball radius");
  estimate->add_option("--method", est_method, "plain|splitting");

  auto* lambda = app.add_subcommand("lambda", "fit the small-ball constant over an eps ladder");
  std::string lam_process = "BM";
  lambda->add_option("--process", lam_process, "BM|F_fbm14|H_free (H runs the eps^-4 variant)");

  auto* verify = app.add_subcommand("verify", "deterministic identity and bound checks");
  std::string which;
  verify->add_option("which", which, "decomposition|d-bound|recursion|entropy|hz-gap")
      ->required();

  auto* spde_cmd = app.add_subcommand("spde", "nonlinear solver experiments");
  std::string spde_kind = "localization_rate";
  spde_cmd->add_option("--experiment", spde_kind, "localization_rate|theorem_u");

  auto* chung = app.add_subcommand("chung", "running-infimum diagnostic for H");
  auto* min_grid = app.add_subcommand("min-grid", "min-over-sites exponent experiment");

  auto* rerun_cmd = app.add_subcommand("rerun", "re-execute a manifest and verify digests");
  std::string manifest_path;
  rerun_cmd->add_option("manifest", manifest_path, "path to manifest.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    Config cfg;
    apply_overrides(cfg, sets);
    if (sample->parsed()) {
      cfg.set("params", "process", sample_process);
      cfg.set("params", "grid_n", std::to_string(sample_n));
      cfg.set("params", "count", std::to_string(sample_count));
      if (kernel_table) cfg.set("params", "kernel_table", "1");
      return execute(g, cfg, "sample");
    }
    if (estimate->parsed()) {
      cfg.set("params", "process", est_process);
      cfg.set("params", "epsilon", std::to_string(est_eps));
      cfg.set("params", "method", est_method);
      return execute(g, cfg, "estimate");
    }
    if (lambda->parsed()) {
      if (lam_process == "H_free") return execute(g, cfg, "prop_H_constant");
      cfg.set("params", "process", lam_process);
      return execute(g, cfg, "lambda_fit");
    }
    if (verify->parsed()) {
      if (which == "decomposition") return execute(g, cfg, "decomposition_check");
      if (which == "d-bound") return execute(g, cfg, "d_bound");
      if (which == "recursion") return execute(g, cfg, "recursion");
      if (which == "entropy") return execute(g, cfg, "entropy");
      if (which == "hz-gap") return execute(g, cfg, "hz_gap");
      std::fprintf(stderr, "unknown verify target: %s\n", which.c_str());
      return 2;
    }
    if (spde_cmd->parsed()) return execute(g, cfg, spde_kind);
    if (chung->parsed()) return execute(g, cfg, "chung_diagnostic");
    if (min_grid->parsed()) return execute(g, cfg, "min_grid");
    if (rerun_cmd->parsed()) {
      const auto report = sblab::experiments::rerun(manifest_path, g.threads, g.out);
      for (const auto& f : report.files)
        std::printf("%s  %s\n", f.matches ? "MATCH" : "DIFFER", f.name.c_str());
      std::printf("%s (new run in %s)\n",
                  report.all_match ? "reproduced bit-exactly" : "REPRODUCTION FAILED",
                  report.new_dir.string().c_str());
      return report.all_match ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
