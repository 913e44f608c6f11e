// Acceptance gate: one PASS/FAIL line per criterion. argv[1] is the path to
// the command-line binary, exercised directly for the spectrum and
// determinism criteria; everything else runs through the library.
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symcluster/cluster.hpp"
#include "symcluster/dephasing.hpp"
#include "symcluster/drive.hpp"
#include "symcluster/env_coupling.hpp"
#include "symcluster/fitting.hpp"
#include "symcluster/ring_exchange.hpp"
#include "symcluster/seeding.hpp"
#include "symcluster/symmetry.hpp"

using namespace symcluster;
using cxd = std::complex<double>;

namespace {

const cxd kI{0.0, 1.0};
const double kSqrt2 = std::sqrt(2.0);
const Vec3 kDir = Vec3{0.3, 0.7, 0.55}.normalized();

int g_failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

void report(int idx, const char* what, bool ok, double seconds,
            double limit) {
  bool pass = ok && seconds < limit;
  if (!pass) ++g_failures;
  std::printf("%s  criterion %d: %s (%.1f s)\n", pass ? "PASS" : "FAIL", idx,
              what, seconds);
  std::fflush(stdout);
}

ClusterSpec quartet(double tilt) {
  ClusterSpec spec;
  spec.sites = {{1, 0, tilt}, {0, 1, -tilt}, {-1, 0, tilt}, {0, -1, -tilt}};
  spec.delta_cl = 10.0;
  spec.coupling_overrides[{0, 1}] = 0.7;
  spec.coupling_overrides[{1, 2}] = 0.7;
  spec.coupling_overrides[{2, 3}] = 0.7;
  spec.coupling_overrides[{0, 3}] = 0.7;
  spec.coupling_overrides[{0, 2}] = 0.31;
  spec.coupling_overrides[{1, 3}] = 0.31;
  return spec;
}

ClusterSpec triangle() {
  ClusterSpec spec;
  spec.delta_cl = 10.0;
  for (int i = 0; i < 3; ++i) {
    double phi = 2.0 * M_PI * i / 3.0;
    spec.sites.push_back({std::cos(phi), std::sin(phi), 0.0});
  }
  return spec;
}

BlockSpectrum labeled(const ClusterSpec& spec, const std::string& group) {
  return label_levels(spec, standard_group(group, spec),
                      block_spectrum(spec));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

int run_cli(const std::string& cli, const std::string& config_text,
            const std::string& tag, const std::string& extra = "") {
  std::filesystem::create_directories("acceptance_out/" + tag);
  std::string cfg_path = "acceptance_out/" + tag + "/config.json";
  std::ofstream(cfg_path) << config_text;
  std::string cmd = "'" + cli + "' --config " + cfg_path +
                    " --out acceptance_out/" + tag + " " + extra +
                    " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

struct SpectrumRow {
  int m = 0;
  double energy = 0.0;
  std::string irrep;
  int dim = 0;
};

std::vector<SpectrumRow> parse_spectrum(const std::string& csv) {
  std::vector<SpectrumRow> rows;
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    SpectrumRow row;
    char irrep[32] = {0};
    if (std::sscanf(line.c_str(), "%d,%lf,%31[^,],%d", &row.m, &row.energy,
                    irrep, &row.dim) == 4) {
      row.irrep = irrep;
      rows.push_back(row);
    }
  }
  return rows;
}

// --------------------------------------------------------------------------

void criterion_1_spectrum(const std::string& cli) {
  Timer tm;
  bool ok = true;
  for (const char* preset : {"s4-quartet", "c4-quartet"}) {
    std::string cfg =
        std::string(R"({"command":"spectrum","preset":")") + preset + "\"}";
    ok = ok && run_cli(cli, cfg, std::string("spec_") + preset) == 0;
    auto rows =
        parse_spectrum(read_file(std::string("acceptance_out/spec_") + preset +
                                 "/spectrum.csv"));
    // block dimensions (1, 4, 6, 4, 1)
    std::map<int, int> dims;
    for (const auto& r : rows) dims[r.m] += 1;
    ok = ok && dims[0] == 1 && dims[1] == 4 && dims[2] == 6 && dims[3] == 4 &&
         dims[4] == 1;
    // GS at -2 Delta (Delta = 10)
    double gs = 1e300;
    for (const auto& r : rows)
      if (r.m == 0) gs = r.energy;
    ok = ok && std::abs(gs + 20.0) <= 1e-12 * 20.0;
    // a two-fold degenerate E level in M=1 and an E level at zero in M=2
    int e_m1 = 0;
    bool e_zero_m2 = false;
    for (const auto& r : rows) {
      if (r.m == 1 && r.irrep == "E" && r.dim == 2) ++e_m1;
      if (r.m == 2 && r.irrep == "E" && std::abs(r.energy) <= 1e-10)
        e_zero_m2 = true;
    }
    ok = ok && e_m1 == 2 && e_zero_m2;
  }
  report(1, "spectrum block structure, ground state, E doublets", ok,
         tm.seconds(), 1.0);
}

double quadrature_nu_fit(const BlockSpectrum& bs) {
  std::vector<std::pair<double, double>> samples;
  const int n = 16;
  for (int i = 0; i < n; ++i) {
    double r = 10.0 * std::pow(10.0, i / double(n - 1));
    NeighborIon ion;
    ion.position = kDir * r;
    double s2 = 0.0;
    for (const auto& lv : bs.levels[1])
      if (lv.irrep == "E")
        s2 += std::norm(
            exact_coupling_matrix_element(bs, ion, bs.levels[0][0], lv));
    samples.push_back({r, std::sqrt(s2)});
  }
  return fit_power_law(samples).exponent;
}

void criterion_2_exponents() {
  Timer tm;
  bool ok = true;

  ClusterSpec s4spec = quartet(0.25);
  ClusterSpec c4spec = quartet(0.0);
  ClusterSpec c3spec = triangle();
  BlockSpectrum bs4 = labeled(s4spec, "S4");
  BlockSpectrum bc4 = labeled(c4spec, "C4");
  BlockSpectrum bc3 = labeled(c3spec, "C3");

  auto predict = [](const ClusterSpec& spec, const std::string& gname,
                    const BlockSpectrum& bs, int doublet_m) {
    std::map<int, std::vector<std::string>> by_m;
    for (int m = 0; m <= spec.n(); ++m)
      for (const auto& lv : bs.levels[m]) by_m[m].push_back(lv.irrep);
    return predict_exponents(standard_group(gname, spec), "E", "A", by_m,
                             doublet_m);
  };
  ExponentPrediction p4 = predict(s4spec, "S4", bs4, 2);
  ExponentPrediction p3 = predict(c3spec, "C3", bc3, 1);
  ExponentPrediction pc = predict(c4spec, "C4", bc4, 1);
  ok = ok && p4.nu == 1 && p4.xi == 1 && p3.nu == 1 && p3.xi == 1 &&
       pc.xi == 2;

  // J_eff ~ r^-(3+nu): doublet-partner quadrature over r in [10, 100]
  ok = ok && std::abs(quadrature_nu_fit(bs4) - 4.0) <= 0.02 * 4.0;
  ok = ok && std::abs(quadrature_nu_fit(bc4) - 4.0) <= 0.02 * 4.0;
  ok = ok && std::abs(quadrature_nu_fit(bc3) - 4.0) <= 0.02 * 4.0;

  // V_delta ~ r^-(6+xi); the leading power emerges in the far field
  SWContext s4ctx = make_sw_context(bs4, 1, "E", 0, 7.0);
  SWContext c4ctx = make_sw_context(bc4, 1, "E", 0, 7.0);
  SWContext c3ctx = make_sw_context(bc3, 1, "E", 0, 7.0);
  ok = ok && std::abs(fit_xi(s4ctx, kDir, 100.0, 1000.0, 14).exponent - 7.0) <=
                 0.05 * 7.0;
  ok = ok && std::abs(fit_xi(c3ctx, kDir, 100.0, 1000.0, 14).exponent - 7.0) <=
                 0.05 * 7.0;
  ok = ok && std::abs(fit_xi(c4ctx, kDir, 100.0, 1000.0, 14).exponent - 8.0) <=
                 0.05 * 8.0;

  // unprotected C2 pseudo-doublet control: slope 6
  ClusterSpec pair;
  pair.sites = {{0.5, 0, 0}, {-0.5, 0, 0}};
  pair.delta_cl = 10.0;
  BlockSpectrum bp = labeled(pair, "C2");
  SWContext ctrl;
  ctrl.bs = bp;
  ctrl.doublet_M = 1;
  ctrl.col1 = 0;
  ctrl.col2 = 1;
  ctrl.delta0 = 7.0;
  ok = ok && std::abs(fit_xi(ctrl, kDir, 300.0, 3000.0, 14).exponent - 6.0) <=
                 0.05 * 6.0;

  report(2, "selection-rule exponents and fitted power laws", ok,
         tm.seconds(), 10.0);
}

void criterion_3_schrieffer_wolff() {
  Timer tm;
  bool ok = true;
  BlockSpectrum bs = labeled(quartet(0.25), "S4");
  const double delta0 = 7.0;
  const Vec3 r0 = kDir * 6.5;

  SWContext base = make_sw_context(bs, 1, "E", 0, delta0, 1.0);
  double eps_d = base.eps_d();
  double detuning = 1e300;
  for (int m : {0, 2})
    for (double e : bs.energies[m])
      for (double sgn : {1.0, -1.0})
        detuning = std::min(detuning, std::abs(e - eps_d + sgn * delta0));

  // scale the ion moment so the exchange splitting is 0.05 of the detuning
  ExchangeBlock unit = exchange_block(base, r0);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(
      Eigen::Matrix2d(unit.v_st() - unit.v_dyn()));
  double split_unit = es.eigenvalues()[1] - es.eigenvalues()[0];
  double moment = std::sqrt(0.05 * detuning / split_unit);

  SWContext full = make_sw_context(bs, 1, "E", 0, delta0, moment);
  SWContext half = make_sw_context(bs, 1, "E", 0, delta0, moment / kSqrt2);
  SWErrorReport rf = verify_sw_vs_exact(full, r0);
  SWErrorReport rh = verify_sw_vs_exact(half, r0);
  ok = ok && rf.rel_error < 0.10;
  double ratio = rh.rel_error / rf.rel_error;
  ok = ok && ratio >= 0.4 && ratio <= 0.6;

  report(3, "exchange splitting vs exact diagonalization, error halving", ok,
         tm.seconds(), 5.0);
}

void criterion_4_particle_hole() {
  Timer tm;
  bool ok = true;
  ClusterSpec spec = quartet(0.25);
  const Vec3 r0 = kDir * 5.0;

  ProtectionReport rep = particle_hole_check(spec, 0, 10.0, r0);
  ok = ok && rep.M == 2;
  ok = ok && std::abs(rep.difference) <= 1e-10 * std::abs(rep.de_plus);
  ok = ok && std::abs(rep.slope_numeric - rep.slope_analytic) <=
                 0.01 * std::abs(rep.slope_analytic);

  std::vector<double> xs, ys;
  for (int j = -5; j <= 5; ++j) {
    double x = 0.1 * 10.0 * j / 5.0 * 0.1;  // detuning up to 1% of Delta
    ProtectionReport r = particle_hole_check(spec, 0, 10.0 - x, r0);
    xs.push_back(x);
    ys.push_back(r.difference);
  }
  LinearFit line = fit_line(xs, ys);
  ok = ok && line.r2 > 0.999;

  report(4, "particle-hole cancellation and linear detuning response", ok,
         tm.seconds(), 5.0);
}

void criterion_5_dephasing_regimes() {
  Timer tm;
  bool ok = true;
  const int realizations = 10000;
  const double delta = 7.0;

  auto curve_fit = [&](double rho, double r_max, double kappa,
                       SequenceKind kind, int n_p, double t_lo, double t_hi) {
    EnsembleSpec ens =
        synthetic_ensemble(rho, 0.2, r_max, kappa, 1.0, delta);
    std::vector<double> times;
    for (int i = 0; i < 7; ++i)
      times.push_back(t_lo * std::pow(t_hi / t_lo, i / 6.0));
    FidelityCurve c =
        ensemble_fidelity(ens, kind, n_p, times, realizations, 2024, 1);
    return fit_stretching(c.times, c.fidelity);
  };

  // Hahn long-time regime: beta = 3/14; kappa doubling scales T2 by ~2
  StretchFit h1 =
      curve_fit(0.077, 3.5, 1.0, SequenceKind::Hahn, 1, 40.0, 1280.0);
  StretchFit h2 =
      curve_fit(0.077, 3.5, 2.0, SequenceKind::Hahn, 1, 80.0, 2560.0);
  ok = ok && std::abs(h1.beta - 0.214) <= 0.05;
  double t2_ratio = h2.t2 / h1.t2;
  ok = ok && t2_ratio >= 1.7 && t2_ratio <= 2.3;

  // CPMG intermediate regime: beta = 9/14; quadrupling N_p scales the
  // timescale by 4^{2/3}
  StretchFit c1 =
      curve_fit(0.373, 3.0, 1.0, SequenceKind::Cpmg, 400, 6.0, 80.0);
  StretchFit c2 =
      curve_fit(0.373, 3.0, 1.0, SequenceKind::Cpmg, 1600, 15.0, 200.0);
  ok = ok && std::abs(c1.beta - 0.643) <= 0.10;
  double np_ratio = c2.t2 / c1.t2;
  ok = ok && np_ratio >= 2.12 && np_ratio <= 2.92;

  report(5, "stretching exponents and timescale scalings (10^4 realizations)",
         ok, tm.seconds(), 600.0);
}

void criterion_6_short_time_oracle() {
  Timer tm;
  const double kappa = 1.0, total = 0.05, tau = total / 2.0, v = 200.0;
  Fluctuator fl;
  fl.kappa_s = kappa;
  fl.coupling.v_d_dyn = v;
  const std::vector<Fluctuator> shell = {fl};
  const PulseSequence seq = hahn(tau);
  const Eigen::Vector2cd plus =
      (Eigen::Vector2cd() << 1.0, 1.0).finished() / kSqrt2;

  const int n_real = 200000;
  cxd mean = 0.0;
  for (int r = 0; r < n_real; ++r) {
    std::mt19937_64 rng(derive_stream(5, "acceptance.quadrature", r));
    std::vector<TelegraphHistory> hist = {sample_history(kappa, total, rng)};
    mean += evolve_commuting(plus, shell, hist, seq);
  }
  mean /= double(n_real);

  // 0-flip histories refocus exactly; 1-flip histories (density
  // kappa e^{-kappa T}) leave phase 2 V F(t1), averaged over s0 = +-1
  const int n_quad = 20000;
  double oracle = std::exp(-kappa * total);
  for (int i = 0; i < n_quad; ++i) {
    double t1 = (i + 0.5) * total / n_quad;
    oracle += kappa * std::exp(-kappa * total) *
              std::cos(2.0 * v * seq.filter_integral(t1)) * total / n_quad;
  }
  double g_mc = -std::log(std::norm(mean)) / 2.0;
  double g_oracle = -std::log(oracle);
  bool ok = std::abs(g_mc - g_oracle) <= 0.10 * g_oracle;

  report(6, "Monte Carlo G vs 0/1-flip Poisson quadrature at kappa t = 0.05",
         ok, tm.seconds(), 60.0);
}

void criterion_7_commutator_control() {
  Timer tm;
  std::mt19937_64 rng(derive_stream(23, "acceptance.commuting"));
  const PulseSequence c = cpmg(0.75, 4);
  std::vector<TelegraphHistory> hist = {sample_history(0.8, 6.0, rng),
                                        sample_history(0.8, 6.0, rng)};
  // the leading difference is a sigma_z/sigma_x commutator ~ sigma_y, so
  // probe with a state of nonzero <sigma_y>
  const Eigen::Vector2cd probe =
      (Eigen::Vector2cd() << 1.0, std::polar(1.0, 0.25 * M_PI)).finished() /
      kSqrt2;
  auto diff = [&](double lambda) {
    auto make = [&](double vd, double vod, double vds, double vods) {
      Fluctuator f;
      f.kappa_s = 0.8;
      f.coupling.v_d_dyn = vd;
      f.coupling.v_od_dyn = vod;
      f.coupling.v_d_st = vds;
      f.coupling.v_od_st = vods;
      return f;
    };
    std::vector<Fluctuator> two = {
        make(lambda * 0.21, lambda * 0.33, lambda * 0.05, 0.0),
        make(lambda * 0.17, -lambda * 0.26, 0.0, lambda * 0.08)};
    return std::abs(evolve_exact(probe, two, hist, c) -
                    evolve_commuting(probe, two, hist, c));
  };
  double ratio = diff(0.05) / diff(0.025);
  bool ok = ratio >= 3.5 && ratio <= 4.5;
  report(7, "exact vs commuting difference scales quadratically in lambda",
         ok, tm.seconds(), 60.0);
}

void criterion_8_drive() {
  Timer tm;
  bool ok = true;
  ClusterSpec spec = quartet(0.25);
  BlockSpectrum bs = labeled(spec, "S4");
  DoubletFrame frame = make_doublet_frame(bs, 1, 0);
  IonDriveMatrixElements el = default_drive_elements(spec);

  // pi-pulse preparation of one doublet state at Rabi/gap = 1e-2
  PreparationReport prep = two_pulse_preparation(frame, el, 40.0,
                                                 1.0 / kSqrt2, kI / kSqrt2,
                                                 1e-2);
  ok = ok && prep.fidelity > 0.999;
  ok = ok && prep.leakage < 1e-4;

  // four-pulse sigma^y gate and its conjugation action
  GateReport gate = four_pulse_gate(frame, el, sigma_y_gate(), 1e-2);
  ok = ok && gate.fidelity > 0.99;

  // a real-gauge exchange block v_d sz + v_od sx, expressed on (d+, d-),
  // must flip sign under conjugation by the achieved gate
  Eigen::Matrix2cd basis;
  basis << 1.0 / kSqrt2, 1.0 / kSqrt2, -kI / kSqrt2, kI / kSqrt2;
  Eigen::Matrix2d v_real;
  v_real << 0.37, 0.21, 0.21, -0.37;
  Eigen::Matrix2cd vk = basis.adjoint() * v_real.cast<cxd>() * basis;
  Eigen::Matrix2cd flipped = gate.achieved.adjoint() * vk * gate.achieved;
  ok = ok && (flipped + vk).norm() < 1e-2 * vk.norm();

  report(8, "doublet preparation and sign-flipping sigma-y gate", ok,
         tm.seconds(), 120.0);
}

void criterion_9_determinism(const std::string& cli) {
  Timer tm;
  const char* cfg =
      R"({"command":"echo","seed":2024,)"
      R"("ensemble":{"density":0.2,"r_min":0.5,"r_max":6,"kappa_s":0.7,)"
      R"("v0":0.5,"delta_exp":7},"sequence":{"kind":"cpmg","n_intervals":4},)"
      R"("echo":{"times":[2,4,8,16,32],"realizations":3000}})";
  bool ok = run_cli(cli, cfg, "det_w1", "--workers 1") == 0;
  ok = ok && run_cli(cli, cfg, "det_w3", "--workers 3") == 0;
  ok = ok && run_cli(cli, cfg, "det_w8", "--workers 8") == 0;
  std::string a = read_file("acceptance_out/det_w1/echo.csv");
  std::string b = read_file("acceptance_out/det_w3/echo.csv");
  std::string c = read_file("acceptance_out/det_w8/echo.csv");
  ok = ok && !a.empty() && a == b && a == c;
  report(9, "echo CSV byte-identical across worker counts", ok, tm.seconds(),
         120.0);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <path-to-cli-binary>\n", argv[0]);
    return 1;
  }
  const std::string cli = argv[1];

  criterion_1_spectrum(cli);
  criterion_2_exponents();
  criterion_3_schrieffer_wolff();
  criterion_4_particle_hole();
  criterion_5_dephasing_regimes();
  criterion_6_short_time_oracle();
  criterion_7_commutator_control();
  criterion_8_drive();
  criterion_9_determinism(cli);

  return g_failures == 0 ? 0 : 1;
}
