#pragma once

#include <complex>
#include <vector>

#include "symcluster/cluster.hpp"
#include "symcluster/fitting.hpp"
#include "symcluster/geometry.hpp"

namespace symcluster {

/// Single-ion hyperfine environment of a neighbor species. Energies are
/// angular frequencies; g_J mu_B is kept explicit so field inputs stay in
/// the same units as energies.
struct HyperfineSpecies {
  double a_hf = 0.0;     // hyperfine constant
  double i_z = 0.0;      // nuclear projection (half-integer)
  double b_z = 0.0;      // applied longitudinal field
  double delta_h = 0.0;  // residual internal field contribution
  double delta = 1.0;    // bare CF gap
  double g_mu = 1.0;     // g_J mu_B
  double jz_me = 1.0;    // <0|J_z|1> matrix element
  double kappa_s = 0.0;  // incoherent flip rate
};

/// Longitudinal field cancelling the hyperfine bias: -A_hf I_z / (g_J mu_B).
double clock_field(const HyperfineSpecies& s);

struct DressedSpecies {
  double m_d = 0.0;         // diagonal magnetization factor
  double m_od = 1.0;        // off-diagonal factor; m_d^2 + m_od^2 = 1
  double delta_tilde = 0.0; // dressed gap
};

/// Two-level dressing by the longitudinal bias h = (A_hf I_z + g mu B) jz + dh.
DressedSpecies dress_species(const HyperfineSpecies& s);

struct NeighborIon {
  Vec3 position = Vec3::Zero();  // measured from the cluster barycenter
  double delta0 = 0.0;           // (dressed) gap
  double m_z = 1.0;              // effective moment, m_od * bare moment
  HyperfineSpecies species{};
};

NeighborIon make_neighbor(const Vec3& position_from_barycenter,
                          const HyperfineSpecies& species, double bare_m_z);

/// Exact secular cluster-ion matrix element
/// gamma = sum_i J_{i,l} <to| sigma_i^(+-) |from>, with the sign chosen by
/// M_to - M_from; returns 0 when |M_to - M_from| != 1 (selection rule).
std::complex<double> exact_coupling_matrix_element(const BlockSpectrum& bs,
                                                   const NeighborIon& ion,
                                                   const LabeledLevel& from,
                                                   const LabeledLevel& to);

/// Per-order contributions of the multipole expansion of the coupling about
/// the cluster barycenter; partial sums converge to the exact element.
/// Throws "expansion invalid" when the ion sits inside the cluster radius.
std::vector<double> multipole_eff_coupling(const BlockSpectrum& bs,
                                           const NeighborIon& ion,
                                           const LabeledLevel& from,
                                           const LabeledLevel& to,
                                           int max_order);

/// Smallest order with a non-negligible multipole contribution, relative to
/// the exact coupling magnitude (or to the largest order if exact vanishes).
int lowest_multipole_order(const std::vector<double>& per_order,
                           double rel_tol = 1e-10);

/// Decay rate Gamma = (J_eff / J_bar)^2 kappa_s.
double t1_rate(double j_eff, double j_bar, double kappa_s);

/// Scaling-form estimate (J_typ/J_bar)^2 (a_cl / r_typ)^{2 nu} kappa_s with
/// r_typ = rho^{-1/3} and J_typ = rho * J_bar.
double t1_rate_scaling(double rho, double a_cl, int nu, double kappa_s);

/// Power-law fit of |exact coupling| along a ray r*dir, r log-spaced in
/// [r_min, r_max]; exponent should approach 3 + nu.
FitResult fit_nu(const BlockSpectrum& bs, const LabeledLevel& from,
                 const LabeledLevel& to, const Vec3& dir, double r_min,
                 double r_max, int n_samples, double ion_m_z = 1.0);

}  // namespace symcluster
