#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sblab/experiments.hpp"
#include "sblab/io.hpp"

using namespace sblab;
using namespace sblab::experiments;

namespace {

std::filesystem::path temp_root(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("sblab_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config round trip and overrides") {
  Config cfg;
  cfg.set("experiment", "kind", "recursion");
  cfg.set("params", "n", "1000");
  cfg.set("params", "c_list", "1,4");
  const std::string text = cfg.serialize();
  const Config back = Config::parse(text);
  CHECK(back.get("experiment", "kind") == std::optional<std::string>("recursion"));
  CHECK(back.get_count("n", 0) == 1000);
  CHECK(back.get_list("c_list", "").size() == 2);

  const Config commented = Config::parse("# comment\n[params]\nx = 3.5\n\n; other\ny = 2\n");
  CHECK(commented.get_num("x", 0.0) == 3.5);
  CHECK_THROWS_AS(Config::parse("no equals sign here"), std::invalid_argument);
  CHECK_THROWS_AS(commented.get_count("x", 0), std::invalid_argument);  // 3.5 not integral
  CHECK_THROWS_AS(commented.require_str("missing"), std::invalid_argument);
}

TEST_CASE("sha256 known vectors") {
  CHECK(io::sha256_hex(std::string("")) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(io::sha256_hex(std::string("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("run writes files and a manifest that reruns bit-exactly") {
  const auto root = temp_root("rerun");
  Config cfg;
  cfg.set("experiment", "kind", "recursion");
  cfg.set("params", "n", "20000");
  cfg.set("params", "c_list", "1,4");
  cfg.set("params", "trend_n", "1000,20000");

  const auto result = run(cfg, 777, 1, root, "first");
  CHECK(std::filesystem::exists(result.dir / "manifest.json"));
  CHECK(std::filesystem::exists(result.dir / "recursion.json"));
  CHECK(std::filesystem::exists(result.dir / "summary.md"));
  for (const auto& f : result.manifest.outputs)
    CHECK(io::sha256_file(result.dir / f.name) == f.sha256);

  const auto report = rerun(result.dir / "manifest.json", 1, root);
  CHECK(report.all_match);
  for (const auto& f : report.files) CHECK(f.matches);

  // a different seed produces different digests for a stochastic experiment
  Config est;
  est.set("experiment", "kind", "estimate");
  est.set("params", "process", "BM");
  est.set("params", "epsilon", "0.8");
  est.set("params", "method", "plain");
  est.set("params", "n", "4000");
  est.set("params", "grid_n", "257");
  const auto ra = run(est, 1, 1, root, "praw-a");
  const auto rb = run(est, 2, 1, root, "praw-b");
  CHECK(ra.manifest.outputs[0].sha256 != rb.manifest.outputs[0].sha256);
}

TEST_CASE("parallel execution never changes results") {
  const auto root = temp_root("threads");
  Config cfg;
  cfg.set("experiment", "kind", "estimate");
  cfg.set("params", "process", "BM");
  cfg.set("params", "epsilon", "0.5");
  cfg.set("params", "method", "splitting");
  cfg.set("params", "grid_n", "513");
  cfg.set("params", "particles", "200");
  cfg.set("params", "repetitions", "4");
  const auto serial = run(cfg, 31415, 1, root, "serial");
  const auto parallel = run(cfg, 31415, 8, root, "parallel");
  REQUIRE(serial.manifest.outputs.size() == parallel.manifest.outputs.size());
  for (std::size_t i = 0; i < serial.manifest.outputs.size(); ++i) {
    CHECK(serial.manifest.outputs[i].name == parallel.manifest.outputs[i].name);
    CHECK(serial.manifest.outputs[i].sha256 == parallel.manifest.outputs[i].sha256);
  }
}

TEST_CASE("schema violations carry the field path") {
  const auto root = temp_root("schema");
  Config cfg;
  cfg.set("experiment", "kind", "no_such_kind");
  CHECK_THROWS_WITH_AS(run(cfg, 1, 1, root), "experiment.kind: unknown kind: no_such_kind",
                       std::invalid_argument);

  Config bad;
  bad.set("experiment", "kind", "hz_gap");
  bad.set("params", "t_list", "0.1,oops");
  CHECK_THROWS_AS(run(bad, 1, 1, root), std::invalid_argument);

  Config missing;
  CHECK_THROWS_AS(run(missing, 1, 1, root), std::invalid_argument);
}

TEST_CASE("variance-gap experiment asserts the linear bound") {
  const auto root = temp_root("hz");
  Config cfg;
  cfg.set("experiment", "kind", "hz_gap");
  cfg.set("params", "t_list", "0.01,0.1,1");
  const auto result = run(cfg, 5, 1, root, "hz");
  const std::string csv_text = read_file(result.dir / "hz_gap.csv");
  CHECK(csv_text.rfind("t,var_gap,bound,ratio\n", 0) == 0);
  CHECK(std::count(csv_text.begin(), csv_text.end(), '\n') == 4);
}

TEST_CASE("sample experiment exports ensembles and kernel tables") {
  const auto root = temp_root("sample");
  Config cfg;
  cfg.set("experiment", "kind", "sample");
  cfg.set("params", "process", "F_fbm14");
  cfg.set("params", "grid_n", "17");
  cfg.set("params", "count", "3");
  const auto result = run(cfg, 6, 1, root, "paths");
  const std::string text = read_file(result.dir / "ensemble.csv");
  CHECK(text.rfind("path_id,t_index,value\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 3 * 17);

  Config ker;
  ker.set("experiment", "kind", "sample");
  ker.set("params", "process", "H_free");
  ker.set("params", "grid_n", "5");
  ker.set("params", "kernel_table", "1");
  const auto kres = run(ker, 7, 1, root, "kernel");
  const std::string ktext = read_file(kres.dir / "kernel.csv");
  CHECK(ktext.rfind("s,t,value\n", 0) == 0);
  CHECK(std::count(ktext.begin(), ktext.end(), '\n') == 1 + 25);
}

TEST_CASE("deterministic verifier experiments produce sane summaries") {
  const auto root = temp_root("verify");
  Config cfg;
  cfg.set("experiment", "kind", "d_bound");
  cfg.set("params", "pairs", "2000");
  const auto result = run(cfg, 8, 1, root, "d");
  const std::string text = read_file(result.dir / "d_bound.json");
  CHECK(text.find("\"violations\": 0") != std::string::npos);

  Config ent;
  ent.set("experiment", "kind", "entropy");
  ent.set("params", "pow_lo", "3");
  ent.set("params", "pow_hi", "6");
  ent.set("params", "d_pairs", "2000");
  const auto eres = run(ent, 9, 1, root, "e");
  CHECK(std::filesystem::exists(eres.dir / "entropy.json"));
}
