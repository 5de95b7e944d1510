#ifndef SBLAB_EXPERIMENTS_HPP
#define SBLAB_EXPERIMENTS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sblab::experiments {

std::string tool_version();

// Flat key = value configuration with named sections; serialization order is
// insertion order, so serialized configs are diffable and stable.
struct Config {
  struct Entry {
    std::string section, key, value;
  };
  std::vector<Entry> entries;

  void set(const std::string& section, const std::string& key, const std::string& value);
  std::optional<std::string> get(const std::string& section, const std::string& key) const;

  std::string get_str(const std::string& key, const std::string& fallback) const;
  std::string require_str(const std::string& key) const;
  double get_num(const std::string& key, double fallback) const;
  std::size_t get_count(const std::string& key, std::size_t fallback) const;
  std::vector<double> get_list(const std::string& key, const std::string& fallback) const;

  std::string serialize() const;
  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);
};

struct OutputFile {
  std::string name;
  std::string sha256;
};

struct ExperimentManifest {
  std::string experiment;
  std::string tool;
  std::uint64_t master_seed = 0;
  std::string config_text;
  std::string started_at;
  std::string finished_at;
  std::vector<OutputFile> outputs;

  std::string to_json() const;
  static ExperimentManifest from_json_file(const std::filesystem::path& path);
};

struct RunResult {
  std::filesystem::path dir;
  ExperimentManifest manifest;
};

// Executes the experiment described by config, writes result files and the
// manifest atomically under out_root/<kind>/<stamp>/, and returns the
// manifest.  Throws on schema violations and on module errors; nothing is
// half-written.  Thread count never changes results, only wall time.
RunResult run(const Config& config, std::uint64_t seed, std::size_t threads,
              const std::filesystem::path& out_root, std::string stamp = "");

struct RerunFileCheck {
  std::string name;
  bool matches = false;
};

struct RerunReport {
  bool all_match = false;
  std::filesystem::path new_dir;
  std::vector<RerunFileCheck> files;
};

// Re-executes a persisted manifest and verifies every output digest.
RerunReport rerun(const std::filesystem::path& manifest_path, std::size_t threads,
                  const std::filesystem::path& out_root);

}  // namespace sblab::experiments

#endif
