// Experiment runner behind the qbdissim command line.
#pragma once

#include "qbd/parallel.hpp"

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qbd::cli {

/// Invalid or incomplete configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentInfo {
  std::string name;
  std::string figure;
  std::string summary;
  std::vector<std::string> required;
  std::vector<std::string> optional;
  std::string csv_header;
};

const std::vector<ExperimentInfo>& catalog();
const ExperimentInfo* find_experiment(const std::string& name);
/// Closest catalog name by edit distance.
std::string suggest_experiment(const std::string& name);

struct ExperimentConfig {
  std::string experiment;
  nlohmann::json parameters = nlohmann::json::object();
  std::string output_path;  // CSV file name, relative to the output directory
  std::uint64_t seed = 1;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Schema problems without running anything; empty when the config is valid.
std::vector<std::string> validate(const ExperimentConfig& config);

struct RunOutput {
  std::string csv;
  nlohmann::json sidecar;
  bool all_converged = true;
  /// Extra files (name, contents), e.g. an optimized protocol.
  std::vector<std::pair<std::string, std::string>> extra_files;
};

/// Runs a validated config. Throws ConfigError for bad parameter values.
RunOutput run_experiment(const ExperimentConfig& config, Exec exec);

/// Full command-line behavior; returns the process exit code.
int main_entry(int argc, char** argv);

}  // namespace qbd::cli
