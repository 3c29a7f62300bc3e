#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace roughwall::cli {

inline constexpr const char* kToolVersion = "0.3.0";

const std::vector<std::string>& experiment_names();

/// Key/value run configuration. Every key has a default (experiment dependent); `values` always holds the
/// fully resolved set, so dumping it makes a run self-describing.
struct ExperimentConfig {
  std::string experiment;
  std::map<std::string, std::string> values;
  int workers = 1;

  static ExperimentConfig defaults(const std::string& experiment);
  /// Parses `key = value` lines ('#' starts a comment). An `experiment` key selects the defaults.
  static ExperimentConfig parse(const std::string& text, const std::string& experiment = "");
  static ExperimentConfig load(const std::filesystem::path& file, const std::string& experiment = "");

  /// Throws ConfigError naming the key when unknown.
  void set(const std::string& key, const std::string& value);

  double num(const std::string& key) const;
  long integer(const std::string& key) const;
  std::uint64_t seed() const;
  std::vector<double> list(const std::string& key) const;
  const std::string& text(const std::string& key) const;

  /// Sorted `key = value` lines, workers excluded.
  std::string canonical() const;
  std::uint64_t hash() const;
};

struct Diagnostic {
  std::string field;
  std::string message;
};

/// Cross-field checks without running solvers; an empty list means the config is usable.
std::vector<Diagnostic> validate(const ExperimentConfig& cfg);

struct StageTiming {
  std::string name;
  double seconds = 0;
};

struct OutputFile {
  std::string name;
  std::uintmax_t bytes = 0;
  std::string fnv1a;
};

struct RunManifest {
  std::string experiment;
  std::string config_hash;
  std::uint64_t seed = 0;
  int workers = 1;
  double wall_clock = 0;
  std::vector<StageTiming> stages;
  std::vector<OutputFile> files;
  std::map<std::string, double> summary;  // headline numbers of the experiment
};

/// Runs the experiment end to end and writes tables, fits, plots and manifest.json into out_dir.
RunManifest run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace roughwall::cli
