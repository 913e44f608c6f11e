#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "symcluster/cluster.hpp"

namespace symcluster {

/// Validation failure while reading a config; `what()` names the offending
/// key path.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EnsembleConfig {
  double density = 0.0;
  double r_min = 1.0;
  double r_max = 10.0;
  double kappa_s = 1.0;
  double v0 = 1.0;
  int delta_exp = 7;        // power-law exponent of the coupling decay
  double od_fraction = 0.0; // off-diagonal admixture
};

struct SequenceConfig {
  std::string kind = "hahn";  // free | hahn | cpmg
  int n_intervals = 1;
};

struct EchoConfig {
  std::vector<double> times;
  int realizations = 1000;
};

struct AnalyticGConfig {
  double delta = 7.0;
  double kappa = 1.0;
  int n_p = 1;
  std::string regime = "auto";
  std::vector<double> times;
};

struct FitConfig {
  double r_min = 10.0;
  double r_max = 100.0;
  int samples = 9;
  Vec3 direction{1.0, 0.0, 0.0};
};

struct IonConfig {
  Vec3 position{5.0, 0.0, 0.0};
  double delta0 = 0.0;  // 0 = match the cluster gap
  double moment = 1.0;
};

struct DoubletConfig {
  int m = 1;
  std::string irrep = "E";
  int alpha = 0;
};

struct ProtectionConfig {
  int col = 0;
  double delta0 = 0.0;  // 0 = match the cluster gap
};

struct DriveConfig {
  double delta_q = 0.05;
  std::complex<double> h_x{1.0, 0.0};
  std::complex<double> h_y{0.0, 1.0};  // circular by default
  double rabi_over_gap = 1e-2;
  std::string method = "pulse";  // pulse | two-pulse
  double eps_e = 40.0;
  double aux_moment = 3.0;
};

struct GateConfig {
  std::string target = "sigma-y";  // identity | sigma-y | swap | phase
  double phi = 0.0;
  double rabi_over_gap = 1e-2;
};

struct ExperimentConfig {
  std::string command;
  std::string preset;  // empty = explicit cluster
  ClusterSpec cluster;
  std::string group = "C1";
  std::uint64_t seed = 1;
  int workers = 1;  // 0 = auto

  EnsembleConfig ensemble;
  SequenceConfig sequence;
  EchoConfig echo;
  AnalyticGConfig analytic_g;
  FitConfig fit;
  IonConfig ion;
  DoubletConfig doublet;
  ProtectionConfig protection;
  DriveConfig drive;
  GateConfig gate;
};

/// Geometry presets: "pair-c2", "c3-triangle", "c4-quartet", "s4-quartet".
/// Fills cluster and group; throws ConfigError for unknown names.
void apply_preset(ExperimentConfig& cfg, const std::string& name);

/// Parse and validate a JSON config. Unknown keys are rejected and all
/// errors name the offending key path. Defaults are applied.
ExperimentConfig parse_config(const std::string& text);

/// Canonical JSON of a validated config with all defaults filled;
/// serialize(parse(text)) is idempotent.
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace symcluster
