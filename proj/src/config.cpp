#include "symcluster/config.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

namespace symcluster {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError("config error at \"" + path + "\": " + msg);
}

void check_keys(const json& j, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      fail(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Vec3 get_vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) fail(path, "expected [x, y, z]");
  return {get_number(j[0], path + "[0]"), get_number(j[1], path + "[1]"),
          get_number(j[2], path + "[2]")};
}

std::complex<double> get_complex(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) fail(path, "expected [re, im]");
  return {get_number(j[0], path + "[0]"), get_number(j[1], path + "[1]")};
}

ClusterSpec parse_cluster(const json& j, const std::string& path) {
  check_keys(j, path,
             {"sites", "delta", "m_z", "coupling_overrides",
              "exchange_overrides"});
  ClusterSpec spec;
  if (!j.contains("sites")) fail(path + ".sites", "required");
  const json& sites = j["sites"];
  if (!sites.is_array() || sites.empty())
    fail(path + ".sites", "expected a non-empty array of [x, y, z]");
  for (size_t i = 0; i < sites.size(); ++i)
    spec.sites.push_back(
        get_vec3(sites[i], path + ".sites[" + std::to_string(i) + "]"));
  if (j.contains("delta")) spec.delta_cl = get_number(j["delta"], path + ".delta");
  if (j.contains("m_z")) spec.m_z = get_number(j["m_z"], path + ".m_z");
  auto bond_list = [&](const char* key,
                       std::map<std::pair<int, int>, double>& out) {
    if (!j.contains(key)) return;
    std::string p = path + "." + key;
    if (!j[key].is_array()) fail(p, "expected an array of [i, j, value]");
    for (size_t b = 0; b < j[key].size(); ++b) {
      std::string pb = p + "[" + std::to_string(b) + "]";
      const json& e = j[key][b];
      if (!e.is_array() || e.size() != 3) fail(pb, "expected [i, j, value]");
      int i = get_int(e[0], pb + "[0]"), k = get_int(e[1], pb + "[1]");
      if (i < 0 || k < 0 || i >= spec.n() || k >= spec.n() || i == k)
        fail(pb, "bond indices out of range");
      out[{std::min(i, k), std::max(i, k)}] = get_number(e[2], pb + "[2]");
    }
  };
  bond_list("coupling_overrides", spec.coupling_overrides);
  bond_list("exchange_overrides", spec.exchange_overrides);
  return spec;
}

json cluster_json(const ClusterSpec& spec) {
  json j;
  j["sites"] = json::array();
  for (const Vec3& s : spec.sites)
    j["sites"].push_back({s.x(), s.y(), s.z()});
  j["delta"] = spec.delta_cl;
  j["m_z"] = spec.m_z;
  auto bonds = [](const std::map<std::pair<int, int>, double>& m) {
    json a = json::array();
    for (const auto& [ij, v] : m) a.push_back({ij.first, ij.second, v});
    return a;
  };
  j["coupling_overrides"] = bonds(spec.coupling_overrides);
  j["exchange_overrides"] = bonds(spec.exchange_overrides);
  return j;
}

const std::set<std::string> kCommands = {
    "spectrum",  "label",      "predict-exponents", "fit-nu",
    "ringex",    "fit-xi",     "protection",        "echo",
    "analytic-g", "prepare",   "gate"};

}  // namespace

void apply_preset(ExperimentConfig& cfg, const std::string& name) {
  ClusterSpec spec;
  if (name == "pair-c2") {
    spec.sites = {{1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}};
    spec.delta_cl = 10.0;
    cfg.group = "C2";
  } else if (name == "c3-triangle") {
    for (int j = 0; j < 3; ++j)
      spec.sites.push_back({std::cos(2.0 * M_PI * j / 3),
                            std::sin(2.0 * M_PI * j / 3), 0.0});
    spec.delta_cl = 10.0;
    cfg.group = "C3";
  } else if (name == "c4-quartet") {
    spec.sites = {{1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, -1, 0}};
    spec.delta_cl = 10.0;
    spec.coupling_overrides[{0, 1}] = 0.7;
    spec.coupling_overrides[{1, 2}] = 0.7;
    spec.coupling_overrides[{2, 3}] = 0.7;
    spec.coupling_overrides[{0, 3}] = 0.7;
    spec.coupling_overrides[{0, 2}] = 0.31;
    spec.coupling_overrides[{1, 3}] = 0.31;
    cfg.group = "C4";
  } else if (name == "s4-quartet") {
    spec.sites = {{1, 0, 0.25}, {0, 1, -0.25}, {-1, 0, 0.25}, {0, -1, -0.25}};
    spec.delta_cl = 10.0;
    spec.coupling_overrides[{0, 1}] = 0.7;
    spec.coupling_overrides[{1, 2}] = 0.7;
    spec.coupling_overrides[{2, 3}] = 0.7;
    spec.coupling_overrides[{0, 3}] = 0.7;
    spec.coupling_overrides[{0, 2}] = 0.31;
    spec.coupling_overrides[{1, 3}] = 0.31;
    cfg.group = "S4";
  } else {
    fail("preset", "unknown preset \"" + name + "\"");
  }
  cfg.cluster = spec;
  cfg.preset = name;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config error: invalid JSON: ") + e.what());
  }
  check_keys(j, "",
             {"command", "preset", "cluster", "group", "seed", "workers",
              "ensemble", "sequence", "echo", "analytic_g", "fit", "ion",
              "doublet", "protection", "drive", "gate"});

  ExperimentConfig cfg;
  if (!j.contains("command")) fail("command", "required");
  cfg.command = get_string(j["command"], "command");
  if (!kCommands.count(cfg.command))
    fail("command", "unknown command \"" + cfg.command + "\"");

  if (j.contains("preset"))
    apply_preset(cfg, get_string(j["preset"], "preset"));
  if (j.contains("cluster")) {
    if (!cfg.preset.empty())
      fail("cluster", "preset and explicit cluster are mutually exclusive");
    cfg.cluster = parse_cluster(j["cluster"], "cluster");
  }
  if (cfg.preset.empty() && !j.contains("cluster") && cfg.command != "echo" &&
      cfg.command != "analytic-g")
    fail("cluster", "required (or give a preset)");
  if (j.contains("group")) cfg.group = get_string(j["group"], "group");

  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0)
      fail("seed", "expected a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("workers")) {
    if (j["workers"].is_string()) {
      if (j["workers"].get<std::string>() != "auto")
        fail("workers", "expected an integer or \"auto\"");
      cfg.workers = 0;
    } else {
      cfg.workers = get_int(j["workers"], "workers");
      if (cfg.workers < 1) fail("workers", "must be >= 1 (or \"auto\")");
    }
  }

  if (j.contains("ensemble")) {
    const json& e = j["ensemble"];
    check_keys(e, "ensemble",
               {"density", "r_min", "r_max", "kappa_s", "v0", "delta_exp",
                "od_fraction"});
    EnsembleConfig& c = cfg.ensemble;
    if (e.contains("density"))
      c.density = get_number(e["density"], "ensemble.density");
    if (e.contains("r_min")) c.r_min = get_number(e["r_min"], "ensemble.r_min");
    if (e.contains("r_max")) c.r_max = get_number(e["r_max"], "ensemble.r_max");
    if (e.contains("kappa_s"))
      c.kappa_s = get_number(e["kappa_s"], "ensemble.kappa_s");
    if (e.contains("v0")) c.v0 = get_number(e["v0"], "ensemble.v0");
    if (e.contains("delta_exp"))
      c.delta_exp = get_int(e["delta_exp"], "ensemble.delta_exp");
    if (e.contains("od_fraction"))
      c.od_fraction = get_number(e["od_fraction"], "ensemble.od_fraction");
    if (c.density < 0.0) fail("ensemble.density", "must be >= 0");
    if (c.kappa_s < 0.0) fail("ensemble.kappa_s", "must be >= 0");
    if (!(c.r_min > 0.0) || !(c.r_max > c.r_min))
      fail("ensemble.r_min", "need 0 < r_min < r_max");
  }

  if (j.contains("sequence")) {
    const json& s = j["sequence"];
    check_keys(s, "sequence", {"kind", "n_intervals"});
    if (s.contains("kind")) {
      cfg.sequence.kind = get_string(s["kind"], "sequence.kind");
      if (cfg.sequence.kind != "free" && cfg.sequence.kind != "hahn" &&
          cfg.sequence.kind != "cpmg")
        fail("sequence.kind", "expected free | hahn | cpmg");
    }
    if (s.contains("n_intervals")) {
      cfg.sequence.n_intervals =
          get_int(s["n_intervals"], "sequence.n_intervals");
      if (cfg.sequence.n_intervals < 1)
        fail("sequence.n_intervals", "must be >= 1");
    }
  }

  if (j.contains("echo")) {
    const json& e = j["echo"];
    check_keys(e, "echo", {"times", "realizations"});
    if (e.contains("times")) {
      if (!e["times"].is_array()) fail("echo.times", "expected an array");
      for (size_t i = 0; i < e["times"].size(); ++i) {
        double t = get_number(e["times"][i],
                              "echo.times[" + std::to_string(i) + "]");
        if (t <= 0.0) fail("echo.times[" + std::to_string(i) + "]",
                           "times must be positive");
        cfg.echo.times.push_back(t);
      }
    }
    if (e.contains("realizations")) {
      cfg.echo.realizations = get_int(e["realizations"], "echo.realizations");
      if (cfg.echo.realizations < 1)
        fail("echo.realizations", "must be >= 1");
    }
  }

  if (j.contains("analytic_g")) {
    const json& a = j["analytic_g"];
    check_keys(a, "analytic_g", {"delta", "kappa", "n_p", "regime", "times"});
    if (a.contains("delta"))
      cfg.analytic_g.delta = get_number(a["delta"], "analytic_g.delta");
    if (a.contains("kappa"))
      cfg.analytic_g.kappa = get_number(a["kappa"], "analytic_g.kappa");
    if (a.contains("n_p"))
      cfg.analytic_g.n_p = get_int(a["n_p"], "analytic_g.n_p");
    if (a.contains("regime"))
      cfg.analytic_g.regime = get_string(a["regime"], "analytic_g.regime");
    if (a.contains("times")) {
      if (!a["times"].is_array())
        fail("analytic_g.times", "expected an array");
      for (size_t i = 0; i < a["times"].size(); ++i)
        cfg.analytic_g.times.push_back(get_number(
            a["times"][i], "analytic_g.times[" + std::to_string(i) + "]"));
    }
  }

  if (j.contains("fit")) {
    const json& f = j["fit"];
    check_keys(f, "fit", {"r_min", "r_max", "samples", "direction"});
    if (f.contains("r_min")) cfg.fit.r_min = get_number(f["r_min"], "fit.r_min");
    if (f.contains("r_max")) cfg.fit.r_max = get_number(f["r_max"], "fit.r_max");
    if (f.contains("samples"))
      cfg.fit.samples = get_int(f["samples"], "fit.samples");
    if (f.contains("direction"))
      cfg.fit.direction = get_vec3(f["direction"], "fit.direction");
    if (!(cfg.fit.r_min > 0.0) || !(cfg.fit.r_max > cfg.fit.r_min))
      fail("fit.r_min", "need 0 < r_min < r_max");
    if (cfg.fit.samples < 8) fail("fit.samples", "must be >= 8");
  }

  if (j.contains("ion")) {
    const json& i = j["ion"];
    check_keys(i, "ion", {"position", "delta0", "moment"});
    if (i.contains("position"))
      cfg.ion.position = get_vec3(i["position"], "ion.position");
    if (i.contains("delta0"))
      cfg.ion.delta0 = get_number(i["delta0"], "ion.delta0");
    if (i.contains("moment"))
      cfg.ion.moment = get_number(i["moment"], "ion.moment");
  }

  if (j.contains("doublet")) {
    const json& d = j["doublet"];
    check_keys(d, "doublet", {"m", "irrep", "alpha"});
    if (d.contains("m")) cfg.doublet.m = get_int(d["m"], "doublet.m");
    if (d.contains("irrep"))
      cfg.doublet.irrep = get_string(d["irrep"], "doublet.irrep");
    if (d.contains("alpha"))
      cfg.doublet.alpha = get_int(d["alpha"], "doublet.alpha");
  }

  if (j.contains("protection")) {
    const json& p = j["protection"];
    check_keys(p, "protection", {"col", "delta0"});
    if (p.contains("col"))
      cfg.protection.col = get_int(p["col"], "protection.col");
    if (p.contains("delta0"))
      cfg.protection.delta0 = get_number(p["delta0"], "protection.delta0");
  }

  if (j.contains("drive")) {
    const json& d = j["drive"];
    check_keys(d, "drive",
               {"delta_q", "h_x", "h_y", "rabi_over_gap", "method", "eps_e",
                "aux_moment"});
    if (d.contains("delta_q"))
      cfg.drive.delta_q = get_number(d["delta_q"], "drive.delta_q");
    if (d.contains("h_x")) cfg.drive.h_x = get_complex(d["h_x"], "drive.h_x");
    if (d.contains("h_y")) cfg.drive.h_y = get_complex(d["h_y"], "drive.h_y");
    if (d.contains("rabi_over_gap"))
      cfg.drive.rabi_over_gap =
          get_number(d["rabi_over_gap"], "drive.rabi_over_gap");
    if (d.contains("method")) {
      cfg.drive.method = get_string(d["method"], "drive.method");
      if (cfg.drive.method != "pulse" && cfg.drive.method != "two-pulse")
        fail("drive.method", "expected pulse | two-pulse");
    }
    if (d.contains("eps_e"))
      cfg.drive.eps_e = get_number(d["eps_e"], "drive.eps_e");
    if (d.contains("aux_moment"))
      cfg.drive.aux_moment = get_number(d["aux_moment"], "drive.aux_moment");
    if (cfg.drive.rabi_over_gap <= 0.0)
      fail("drive.rabi_over_gap", "must be > 0");
  }

  if (j.contains("gate")) {
    const json& g = j["gate"];
    check_keys(g, "gate", {"target", "phi", "rabi_over_gap"});
    if (g.contains("target")) {
      cfg.gate.target = get_string(g["target"], "gate.target");
      if (cfg.gate.target != "identity" && cfg.gate.target != "sigma-y" &&
          cfg.gate.target != "swap" && cfg.gate.target != "phase")
        fail("gate.target", "expected identity | sigma-y | swap | phase");
    }
    if (g.contains("phi")) cfg.gate.phi = get_number(g["phi"], "gate.phi");
    if (g.contains("rabi_over_gap")) {
      cfg.gate.rabi_over_gap =
          get_number(g["rabi_over_gap"], "gate.rabi_over_gap");
      if (cfg.gate.rabi_over_gap <= 0.0)
        fail("gate.rabi_over_gap", "must be > 0");
    }
  }

  if (!cfg.cluster.sites.empty()) cfg.cluster.validate();
  return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json j;
  j["command"] = cfg.command;
  if (!cfg.preset.empty())
    j["preset"] = cfg.preset;
  else if (!cfg.cluster.sites.empty())
    j["cluster"] = cluster_json(cfg.cluster);
  j["group"] = cfg.group;
  j["seed"] = cfg.seed;
  if (cfg.workers == 0)
    j["workers"] = "auto";
  else
    j["workers"] = cfg.workers;
  j["ensemble"] = {{"density", cfg.ensemble.density},
                   {"r_min", cfg.ensemble.r_min},
                   {"r_max", cfg.ensemble.r_max},
                   {"kappa_s", cfg.ensemble.kappa_s},
                   {"v0", cfg.ensemble.v0},
                   {"delta_exp", cfg.ensemble.delta_exp},
                   {"od_fraction", cfg.ensemble.od_fraction}};
  j["sequence"] = {{"kind", cfg.sequence.kind},
                   {"n_intervals", cfg.sequence.n_intervals}};
  j["echo"] = {{"times", cfg.echo.times},
               {"realizations", cfg.echo.realizations}};
  j["analytic_g"] = {{"delta", cfg.analytic_g.delta},
                     {"kappa", cfg.analytic_g.kappa},
                     {"n_p", cfg.analytic_g.n_p},
                     {"regime", cfg.analytic_g.regime},
                     {"times", cfg.analytic_g.times}};
  j["fit"] = {{"r_min", cfg.fit.r_min},
              {"r_max", cfg.fit.r_max},
              {"samples", cfg.fit.samples},
              {"direction",
               {cfg.fit.direction.x(), cfg.fit.direction.y(),
                cfg.fit.direction.z()}}};
  j["ion"] = {{"position",
               {cfg.ion.position.x(), cfg.ion.position.y(),
                cfg.ion.position.z()}},
              {"delta0", cfg.ion.delta0},
              {"moment", cfg.ion.moment}};
  j["doublet"] = {{"m", cfg.doublet.m},
                  {"irrep", cfg.doublet.irrep},
                  {"alpha", cfg.doublet.alpha}};
  j["protection"] = {{"col", cfg.protection.col},
                     {"delta0", cfg.protection.delta0}};
  j["drive"] = {{"delta_q", cfg.drive.delta_q},
                {"h_x", {cfg.drive.h_x.real(), cfg.drive.h_x.imag()}},
                {"h_y", {cfg.drive.h_y.real(), cfg.drive.h_y.imag()}},
                {"rabi_over_gap", cfg.drive.rabi_over_gap},
                {"method", cfg.drive.method},
                {"eps_e", cfg.drive.eps_e},
                {"aux_moment", cfg.drive.aux_moment}};
  j["gate"] = {{"target", cfg.gate.target},
               {"phi", cfg.gate.phi},
               {"rabi_over_gap", cfg.gate.rabi_over_gap}};
  return j.dump(2) + "\n";
}

}  // namespace symcluster
