#include "symcluster/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>
#include <variant>

#include <json.hpp>

#include "symcluster/dephasing.hpp"
#include "symcluster/drive.hpp"
#include "symcluster/env_coupling.hpp"
#include "symcluster/ring_exchange.hpp"
#include "symcluster/symmetry.hpp"

namespace symcluster {

namespace {

using nlohmann::json;
using Cell = std::variant<double, long long, std::string>;

/// 17 significant digits, scientific: enough to reproduce a double exactly.
std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

std::string cell_text(const Cell& c) {
  if (std::holds_alternative<double>(c)) return fmt17(std::get<double>(c));
  if (std::holds_alternative<long long>(c))
    return std::to_string(std::get<long long>(c));
  return std::get<std::string>(c);
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }

  std::string to_csv() const {
    std::string out;
    for (size_t c = 0; c < columns.size(); ++c)
      out += (c ? "," : "") + columns[c];
    out += "\n";
    for (const auto& row : rows) {
      for (size_t c = 0; c < row.size(); ++c)
        out += (c ? "," : "") + cell_text(row[c]);
      out += "\n";
    }
    return out;
  }

  std::string to_json() const {
    json arr = json::array();
    for (const auto& row : rows) {
      json obj;
      for (size_t c = 0; c < row.size(); ++c) {
        const Cell& cl = row[c];
        if (std::holds_alternative<double>(cl))
          obj[columns[c]] = std::get<double>(cl);
        else if (std::holds_alternative<long long>(cl))
          obj[columns[c]] = std::get<long long>(cl);
        else
          obj[columns[c]] = std::get<std::string>(cl);
      }
      arr.push_back(obj);
    }
    return arr.dump(2) + "\n";
  }
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)v);
  return buf;
}

int resolve_workers(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("SYMCLUSTER_WORKERS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? int(hw) : 1;
}

struct LabeledCluster {
  ClusterSpec spec;
  PointGroup group;
  BlockSpectrum bs;
};

LabeledCluster labeled_cluster(const ExperimentConfig& cfg) {
  if (cfg.cluster.sites.empty())
    throw ConfigError("config error at \"cluster\": required for command \"" +
                      cfg.command + "\"");
  LabeledCluster lc{cfg.cluster, standard_group(cfg.group, cfg.cluster), {}};
  lc.bs = label_levels(lc.spec, lc.group, block_spectrum(lc.spec));
  return lc;
}

const LabeledLevel& find_level(const BlockSpectrum& bs, int m,
                               const std::string& irrep, int alpha, int k) {
  if (m < 0 || m > bs.n())
    throw ConfigError("config error at \"doublet.m\": out of range");
  for (const LabeledLevel& lv : bs.levels[m])
    if (lv.irrep == irrep && lv.alpha == alpha && lv.k == k) return lv;
  throw ConfigError("config error at \"doublet\": level (" + irrep +
                    ", alpha=" + std::to_string(alpha) + ") not found in M=" +
                    std::to_string(m));
}

SequenceKind sequence_kind(const std::string& kind) {
  if (kind == "free") return SequenceKind::FreeEvolution;
  if (kind == "hahn") return SequenceKind::Hahn;
  return SequenceKind::Cpmg;
}

// ---------------------------------------------------------------------------
// command handlers: fill table + report quantities/warnings
// ---------------------------------------------------------------------------

void run_spectrum(const ExperimentConfig& cfg, Table& tab, RunReport& rep) {
  LabeledCluster lc = labeled_cluster(cfg);
  tab.columns = {"M", "energy", "irrep", "dim", "k", "alpha"};
  for (int m = 0; m <= lc.spec.n(); ++m)
    for (const LabeledLevel& lv : lc.bs.levels[m])
      tab.add({(long long)lv.M, lv.energy, lv.irrep, (long long)lv.dim,
               (long long)lv.k, (long long)lv.alpha});
  rep.quantities["n_levels"] = double(1 << lc.spec.n());
  rep.quantities["gs_energy"] = lc.bs.energies[0][0];
}

void run_label(const ExperimentConfig& cfg, Table& tab, RunReport& rep) {
  LabeledCluster lc = labeled_cluster(cfg);
  tab.columns = {"M", "irrep", "count"};
  for (int m = 0; m <= lc.spec.n(); ++m) {
    std::map<std::string, int> counts;
    for (const LabeledLevel& lv : lc.bs.levels[m]) counts[lv.irrep] += 1;
    for (const auto& [name, cnt] : counts)
      tab.add({(long long)m, name, (long long)cnt});
  }
  rep.quantities["group_order"] = double(lc.group.order());
}

void run_predict_exponents(const ExperimentConfig& cfg, Table& tab,
                           RunReport& rep) {
  LabeledCluster lc = labeled_cluster(cfg);
  std::map<int, std::vector<std::string>> by_m;
  for (int m = 0; m <= lc.spec.n(); ++m)
    for (const LabeledLevel& lv : lc.bs.levels[m])
      by_m[m].push_back(lv.irrep);
  ExponentPrediction pred = predict_exponents(
      lc.group, cfg.doublet.irrep, lc.bs.levels[0][0].irrep, by_m,
      cfg.doublet.m);
  tab.columns = {"nu", "xi", "witness"};
  tab.add({(long long)pred.nu, (long long)pred.xi, pred.witness});
  rep.quantities["nu"] = pred.nu;
  rep.quantities["xi"] = pred.xi;
}

void run_fit_nu(const ExperimentConfig& cfg, Table& tab, RunReport& rep) {
  LabeledCluster lc = labeled_cluster(cfg);
  const LabeledLevel& from = lc.bs.levels[0][0];
  const LabeledLevel& to =
      find_level(lc.bs, cfg.doublet.m, cfg.doublet.irrep, cfg.doublet.alpha, 0);
  FitResult fit = fit_nu(lc.bs, from, to, cfg.fit.direction, cfg.fit.r_min,
                         cfg.fit.r_max, cfg.fit.samples, cfg.ion.moment);
  tab.columns = {"exponent", "prefactor", "residual"};
  tab.add({fit.exponent, fit.prefactor, fit.residual});
  rep.quantities["exponent"] = fit.exponent;
  rep.quantities["residual"] = fit.residual;
}

SWContext sw_context(const ExperimentConfig& cfg, const LabeledCluster& lc) {
  double delta0 = cfg.ion.delta0 != 0.0 ? cfg.ion.delta0 : lc.spec.delta_cl;
  return make_sw_context(lc.bs, cfg.doublet.m, cfg.doublet.irrep,
                         cfg.doublet.alpha, delta0, cfg.ion.moment);
}

void run_ringex(const ExperimentConfig& cfg, Table& tab, RunReport& rep) {
  LabeledCluster lc = labeled_cluster(cfg);
  SWContext ctx = sw_context(cfg, lc);
  ExchangeBlock block = exchange_block(ctx, cfg.ion.position);
  SWErrorReport err = verify_sw_vs_exact(ctx, cfg.ion.position);
  tab.columns = {"v_d_minus", "v_od_minus", "v_d_plus", "v_od_plus",
                 "v_delta", "sw_rel_error"};
  tab.add({block.v_d_minus, block.v_od_minus, block.v_d_plus,
           block.v_od_plus, block.v_delta(), err.rel_error});
  rep.quantities["v_delta"] = block.v_delta();
  rep.quantities["sw_rel_error"] = err.rel_error;
}

void run_fit_xi(const ExperimentConfig& cfg, Table& tab, RunReport& rep) {
  LabeledCluster lc = labeled_cluster(cfg);
  SWContext ctx = sw_context(cfg, lc);
  FitResult fit = fit_xi(ctx, cfg.fit.direction, cfg.fit.r_min, cfg.fit.r_max,
                         cfg.fit.samples);
  tab.columns = {"exponent", "prefactor", "residual"};
  tab.add({fit.exponent, fit.prefactor, fit.residual});
  rep.quantities["exponent"] = fit.exponent;
  rep.quantities["residual"] = fit.residual;
}

void run_protection(const ExperimentConfig& cfg, Table& tab, RunReport& rep) {
  LabeledCluster lc = labeled_cluster(cfg);
  double delta0 =
      cfg.protection.delta0 != 0.0 ? cfg.protection.delta0 : lc.spec.delta_cl;
  ProtectionReport pr = particle_hole_check(lc.spec, cfg.protection.col,
                                            delta0, cfg.ion.position,
                                            cfg.ion.moment);
  tab.columns = {"M", "col", "delta0", "de_plus", "de_minus", "difference",
                 "slope_numeric", "slope_analytic"};
  tab.add({(long long)pr.M, (long long)pr.col, pr.delta0, pr.de_plus,
           pr.de_minus, pr.difference, pr.slope_numeric, pr.slope_analytic});
  rep.quantities["difference"] = pr.difference;
  rep.quantities["slope_numeric"] = pr.slope_numeric;
  rep.quantities["slope_analytic"] = pr.slope_analytic;
}

void run_echo(const ExperimentConfig& cfg, Table& tab, RunReport& rep) {
  if (cfg.echo.times.empty())
    throw ConfigError("config error at \"echo.times\": required");
  EnsembleSpec ens = synthetic_ensemble(
      cfg.ensemble.density, cfg.ensemble.r_min, cfg.ensemble.r_max,
      cfg.ensemble.kappa_s, cfg.ensemble.v0, cfg.ensemble.delta_exp,
      cfg.ensemble.od_fraction);
  FidelityCurve curve = ensemble_fidelity(
      ens, sequence_kind(cfg.sequence.kind), cfg.sequence.n_intervals,
      cfg.echo.times, cfg.echo.realizations, cfg.seed,
      resolve_workers(cfg.workers));
  tab.columns = {"time", "fidelity", "mean_re", "mean_im", "std_error"};
  for (size_t i = 0; i < curve.times.size(); ++i)
    tab.add({curve.times[i], curve.fidelity[i], curve.mean_amplitude[i].real(),
             curve.mean_amplitude[i].imag(), curve.std_error[i]});
  rep.warnings.insert(rep.warnings.end(), curve.warnings.begin(),
                      curve.warnings.end());
  StretchFit fit = fit_stretching(curve.times, curve.fidelity);
  if (std::isfinite(fit.beta) && std::isfinite(fit.t2)) {
    rep.quantities["beta"] = fit.beta;
    rep.quantities["t2"] = fit.t2;
    rep.quantities["fit_r2"] = fit.r2;
  } else {
    rep.warnings.push_back(
        "stretching fit undefined: curve shows no measurable decay");
  }
}

void run_analytic_g(const ExperimentConfig& cfg, Table& tab, RunReport& rep) {
  if (cfg.analytic_g.times.empty())
    throw ConfigError("config error at \"analytic_g.times\": required");
  tab.columns = {"time", "value", "regime", "ambiguous", "value_low",
                 "value_high"};
  bool any_ambiguous = false;
  for (double t : cfg.analytic_g.times) {
    AnalyticG g = analytic_g(cfg.analytic_g.delta, cfg.analytic_g.kappa, t,
                             cfg.analytic_g.n_p, cfg.analytic_g.regime);
    any_ambiguous = any_ambiguous || g.ambiguous;
    tab.add({t, g.value, g.regime, (long long)(g.ambiguous ? 1 : 0),
             g.value_low, g.value_high});
  }
  if (any_ambiguous)
    rep.warnings.push_back(
        "regime ambiguity: some times fall inside a crossover window");
}

void run_prepare(const ExperimentConfig& cfg, Table& tab, RunReport& rep) {
  LabeledCluster lc = labeled_cluster(cfg);
  DoubletFrame frame =
      make_doublet_frame(lc.bs, cfg.doublet.m, cfg.doublet.alpha);
  IonDriveMatrixElements el =
      default_drive_elements(lc.spec, cfg.drive.delta_q);
  PreparationReport pr =
      cfg.drive.method == "two-pulse"
          ? two_pulse_preparation(frame, el, cfg.drive.eps_e, cfg.drive.h_x,
                                  cfg.drive.h_y, cfg.drive.rabi_over_gap, 1.0,
                                  0.0, cfg.drive.aux_moment)
          : prepare_doublet(frame, el, cfg.drive.h_x, cfg.drive.h_y,
                            cfg.drive.rabi_over_gap);
  tab.columns = {"fidelity", "leakage", "intermediate_population",
                 "amp_plus_re", "amp_plus_im", "amp_minus_re", "amp_minus_im"};
  tab.add({pr.fidelity, pr.leakage, pr.intermediate_population,
           pr.doublet_amplitudes[0].real(), pr.doublet_amplitudes[0].imag(),
           pr.doublet_amplitudes[1].real(), pr.doublet_amplitudes[1].imag()});
  rep.quantities["fidelity"] = pr.fidelity;
  rep.quantities["leakage"] = pr.leakage;
  rep.warnings.insert(rep.warnings.end(), pr.warnings.begin(),
                      pr.warnings.end());
}

void run_gate(const ExperimentConfig& cfg, Table& tab, RunReport& rep) {
  LabeledCluster lc = labeled_cluster(cfg);
  DoubletFrame frame =
      make_doublet_frame(lc.bs, cfg.doublet.m, cfg.doublet.alpha);
  IonDriveMatrixElements el =
      default_drive_elements(lc.spec, cfg.drive.delta_q);
  Eigen::Matrix2cd target;
  if (cfg.gate.target == "identity") {
    target = Eigen::Matrix2cd::Identity();
  } else if (cfg.gate.target == "sigma-y") {
    target = sigma_y_gate();
  } else if (cfg.gate.target == "swap") {
    target << 0.0, 1.0, 1.0, 0.0;
  } else {  // phase
    target << 1.0, 0.0, 0.0, std::exp(std::complex<double>(0.0, cfg.gate.phi));
  }
  GateReport gr = four_pulse_gate(frame, el, target, cfg.gate.rabi_over_gap);
  tab.columns = {"row", "col", "target_re", "target_im", "achieved_re",
                 "achieved_im"};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      tab.add({(long long)r, (long long)c, gr.target(r, c).real(),
               gr.target(r, c).imag(), gr.achieved(r, c).real(),
               gr.achieved(r, c).imag()});
  rep.quantities["fidelity"] = gr.fidelity;
  rep.quantities["leakage"] = gr.leakage;
  if (cfg.gate.target == "phase")
    rep.quantities["achieved_phase"] =
        std::arg(gr.achieved(1, 1) / gr.achieved(0, 0));
  rep.warnings.insert(rep.warnings.end(), gr.warnings.begin(),
                      gr.warnings.end());
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

}  // namespace

RunReport run(const ExperimentConfig& cfg, const RunOptions& opts) {
  if (opts.format != "csv" && opts.format != "json")
    throw ConfigError("config error at \"format\": expected csv | json");
  auto t0 = std::chrono::steady_clock::now();
  RunReport rep;
  rep.command = cfg.command;
  rep.input_hash = hex64(fnv1a(serialize_config(cfg)));

  Table tab;
  if (cfg.command == "spectrum") run_spectrum(cfg, tab, rep);
  else if (cfg.command == "label") run_label(cfg, tab, rep);
  else if (cfg.command == "predict-exponents") run_predict_exponents(cfg, tab, rep);
  else if (cfg.command == "fit-nu") run_fit_nu(cfg, tab, rep);
  else if (cfg.command == "ringex") run_ringex(cfg, tab, rep);
  else if (cfg.command == "fit-xi") run_fit_xi(cfg, tab, rep);
  else if (cfg.command == "protection") run_protection(cfg, tab, rep);
  else if (cfg.command == "echo") run_echo(cfg, tab, rep);
  else if (cfg.command == "analytic-g") run_analytic_g(cfg, tab, rep);
  else if (cfg.command == "prepare") run_prepare(cfg, tab, rep);
  else if (cfg.command == "gate") run_gate(cfg, tab, rep);
  else throw ConfigError("config error at \"command\": unknown command");

  for (const auto& [key, value] : rep.quantities)
    if (!std::isfinite(value))
      throw std::runtime_error("numerical failure: non-finite \"" + key +
                               "\"");

  std::string data_path = opts.out_dir + "/" + cfg.command + "." + opts.format;
  write_file(data_path, opts.format == "csv" ? tab.to_csv() : tab.to_json());
  rep.outputs.push_back(data_path);

  rep.wall_time_s = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
  std::string report_path = opts.out_dir + "/report.json";
  write_file(report_path, serialize_report(rep));
  rep.outputs.push_back(report_path);
  return rep;
}

std::string serialize_report(const RunReport& rep) {
  json j;
  j["command"] = rep.command;
  j["input_hash"] = rep.input_hash;
  j["outputs"] = rep.outputs;
  json q;
  for (const auto& [key, value] : rep.quantities) q[key] = value;
  j["quantities"] = q;
  j["warnings"] = rep.warnings;
  j["wall_time_s"] = rep.wall_time_s;
  return j.dump(2) + "\n";
}

}  // namespace symcluster
