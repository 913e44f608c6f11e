#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symcluster/fitting.hpp"
#include "symcluster/geometry.hpp"
#include "symcluster/ring_exchange.hpp"

namespace symcluster {

// ---------------------------------------------------------------------------
// Pulse sequences
// ---------------------------------------------------------------------------

enum class SequenceKind { FreeEvolution, Hahn, Cpmg };

/// A refocusing sequence with instantaneous pi pulses at odd multiples of
/// tau and total duration 2 * n_intervals * tau. Evolution is expressed in
/// the toggling frame: each pulse flips the sign f(t) of the environment
/// coupling, so a static coupling refocuses exactly at the sequence end.
struct PulseSequence {
  SequenceKind kind = SequenceKind::Hahn;
  double tau = 1.0;
  int n_intervals = 1;  // number of pulses; Hahn has exactly 1

  double total_time() const { return 2.0 * n_intervals * tau; }
  std::vector<double> pulse_times() const;

  /// Toggling sign f(t) = (-1)^{#pulses before t}.
  double f(double t) const;

  /// Running integral F(t) = int_0^t f(u) du; a triangle wave of period
  /// 4 tau for echo sequences, F(t) = t for free evolution.
  double filter_integral(double t) const;
};

PulseSequence free_evolution(double total_time);
PulseSequence hahn(double tau);
PulseSequence cpmg(double tau, int n_intervals);

// ---------------------------------------------------------------------------
// Telegraph fluctuators
// ---------------------------------------------------------------------------

/// Coupling of one fluctuator to the doublet, split into a telegraph part
/// (multiplied by s(t) = +-1) and a static part; each is v_d sigma_z +
/// v_od sigma_x in the doublet basis.
struct TelegraphCoupling {
  double v_d_dyn = 0.0;
  double v_od_dyn = 0.0;
  double v_d_st = 0.0;
  double v_od_st = 0.0;

  bool commuting() const { return v_od_dyn == 0.0 && v_od_st == 0.0; }
};

struct Fluctuator {
  Vec3 position = Vec3::Zero();  // from the cluster barycenter, bookkeeping
  double kappa_s = 0.0;          // Poisson flip rate
  TelegraphCoupling coupling;
};

/// One trajectory of a telegraph variable: initial sign and ordered flip
/// times inside [0, horizon).
struct TelegraphHistory {
  int s0 = 1;
  std::vector<double> flip_times;

  int state_at(double t) const;
};

/// Draw s(0) = +-1 equiprobably and Poissonian flip times at rate kappa_s.
TelegraphHistory sample_history(double kappa_s, double horizon,
                                std::mt19937_64& rng);

/// Weighted filter integral int_0^T f(u) s(u) du for a single history.
double dynamic_weight(const TelegraphHistory& history,
                      const PulseSequence& seq, double total_time);

/// Exact time-ordered evolution of the doublet amplitude <psi0|psi(T)> in
/// the toggling frame, over total_time = seq.total_time(). Falls back to a
/// closed-form phase when every coupling commutes (sigma_z only).
std::complex<double> evolve_exact(const Eigen::Vector2cd& psi0,
                                  const std::vector<Fluctuator>& fluctuators,
                                  const std::vector<TelegraphHistory>& histories,
                                  const PulseSequence& seq);

/// Factorized approximation: each fluctuator contributes exp(-i X_j) with
/// X_j the time integral of its own coupling; exact when all couplings
/// commute, O(lambda^2) error otherwise.
std::complex<double> evolve_commuting(
    const Eigen::Vector2cd& psi0, const std::vector<Fluctuator>& fluctuators,
    const std::vector<TelegraphHistory>& histories, const PulseSequence& seq);

// ---------------------------------------------------------------------------
// Disorder ensembles
// ---------------------------------------------------------------------------

/// A Poisson point process of fluctuators in the shell r_min <= r <= r_max
/// around the cluster, all flipping at rate kappa_s, with couplings given
/// by a position-dependent rule.
struct EnsembleSpec {
  double density = 0.0;
  double r_min = 1.0;
  double r_max = 10.0;
  double kappa_s = 0.0;
  std::function<TelegraphCoupling(const Vec3&)> coupling;
};

/// Synthetic power law v_d = v0 (1 - 3 cos^2 theta) / r^delta on the
/// telegraph part; od_fraction adds a proportional sigma_x component.
EnsembleSpec synthetic_ensemble(double density, double r_min, double r_max,
                                double kappa_s, double v0, double delta,
                                double od_fraction = 0.0);

/// Couplings taken from the second-order ring-exchange block of a cluster
/// doublet; the telegraph variable is the neighbor-ion state.
EnsembleSpec physical_ensemble(const SWContext& ctx, double density,
                               double r_min, double r_max, double kappa_s);

struct FidelityCurve {
  std::vector<double> times;
  std::vector<std::complex<double>> mean_amplitude;
  std::vector<double> fidelity;   // |mean amplitude|^2
  std::vector<double> std_error;  // standard error of |mean amplitude|^2
  std::vector<std::string> warnings;
};

/// Monte Carlo echo fidelity of the equal superposition under a disorder
/// ensemble and a pulse sequence of fixed pulse count whose tau is scaled
/// so each requested time is a sequence end. The complex amplitude is
/// averaged over realizations before taking the modulus squared. Results
/// are deterministic in (seed, realizations) and independent of workers.
FidelityCurve ensemble_fidelity(const EnsembleSpec& ensemble,
                                SequenceKind kind, int n_intervals,
                                const std::vector<double>& times,
                                int realizations, std::uint64_t seed,
                                int workers = 1);

// ---------------------------------------------------------------------------
// Analytic decay function and timescale summary
// ---------------------------------------------------------------------------

/// Regime factor G(t) such that -ln F = c rho V0^{3/delta} G for a dilute
/// power-law ensemble of telegraph fluctuators:
///   short (kappa t << 1):        G = kappa t (delta/(delta+3)) (2 tau)^{3/delta}
///   intermediate (1<<kappa t<<N): G = (t^3 kappa / N_p^2)^{3/(2 delta)}
///   long (kappa t >> N_p):        G = (t / kappa)^{3/(2 delta)}
/// "auto" picks by kappa t with a crossover factor 3 on each boundary and
/// reports the bracketing values when ambiguous.
struct AnalyticG {
  double value = 0.0;
  std::string regime;
  bool ambiguous = false;
  double value_low = 0.0;
  double value_high = 0.0;
};

AnalyticG analytic_g(double delta, double kappa_s, double t, int n_p,
                     const std::string& regime = "auto");

/// Competing coherence times: motional narrowing T_mn = kappa / <V>^2 and
/// the pulse-limited T_Np = (N_p^2 / (<V>^2 kappa))^{1/3}; the realized T2
/// follows the branch rule kappa/<V> <= sqrt(N_p) -> T_Np, else T_mn.
struct T2Summary {
  double v_typ = 0.0;
  double kappa_s = 0.0;
  int n_p = 1;
  double t_mn = 0.0;
  double t_np = 0.0;
  double t2 = 0.0;
  std::string branch;
};

T2Summary t2_summary(double v_typ, double kappa_s, int n_p);

}  // namespace symcluster
