#pragma once

#include <map>
#include <string>
#include <vector>

#include "symcluster/config.hpp"

namespace symcluster {

struct RunOptions {
  std::string out_dir = ".";
  std::string format = "csv";  // csv | json
};

struct RunReport {
  std::string command;
  std::string input_hash;  // hash of the canonical config
  std::vector<std::string> outputs;  // written file paths
  std::map<std::string, double> quantities;
  std::vector<std::string> warnings;
  double wall_time_s = 0.0;
};

/// Execute one command and write its data table (<command>.csv or .json)
/// plus report.json into out_dir. ConfigError / std::invalid_argument
/// signal validation problems (exit 2), std::runtime_error numerical
/// failure (exit 3).
RunReport run(const ExperimentConfig& cfg, const RunOptions& opts);

std::string serialize_report(const RunReport& rep);

}  // namespace symcluster
