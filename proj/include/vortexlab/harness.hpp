#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace vortexlab::harness {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Experiment {
  PvRun,
  PvSelfsim,
  BlobRun,
  BlobThreeblob,
  DiskBlob,
  ToyRun,
  ToySweep,
  FieldLipschitz,
};

std::string_view to_string(Experiment e);

enum class Kind { Real, Integer, RealList, Word };

struct Value {
  Kind kind = Kind::Word;
  double real = 0.0;
  long long integer = 0;
  std::vector<double> list;
  std::string word;

  std::string text() const;
  friend bool operator==(const Value&, const Value&) = default;
};

/// Validated flat key=value configuration.
class ExperimentConfig {
 public:
  Experiment experiment = Experiment::PvRun;
  std::map<std::string, Value> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  double real(const std::string& key, double fallback) const;
  long long integer(const std::string& key, long long fallback) const;
  std::vector<double> list(const std::string& key, std::vector<double> fallback) const;
  std::string word(const std::string& key, std::string fallback) const;

  /// key=value lines in key order; parse_config(echo()) reproduces the config.
  std::string echo() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct ConfigError {
  int line = 0;  // 0 when the error is not tied to a line
  std::string message;
};

struct ParseResult {
  ExperimentConfig config;
  std::vector<ConfigError> errors;

  bool ok() const { return errors.empty(); }
};

/// Collects every error (unknown key, duplicate, bad value, range, missing key).
ParseResult parse_config(std::string_view text);

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double limit = 0.0;
  std::string detail;
};

struct RunManifest {
  std::string config_echo;
  std::string version;
  std::string platform;
  double wall_time = 0.0;
  std::vector<std::string> outputs;
  std::vector<Check> checks;

  bool all_pass() const;
  std::string text() const;
};

struct RunContext {
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;
};

/// Runs one experiment, writes its CSV outputs and manifest.txt into out_dir.
/// Module errors become FAIL checks carrying the error text.
RunManifest run_experiment(const ExperimentConfig& cfg, const RunContext& ctx);

}  // namespace vortexlab::harness
