#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "symcluster/cluster.hpp"

namespace symcluster {

// ---------------------------------------------------------------------------
// Weakly allowed in-plane matrix elements
// ---------------------------------------------------------------------------

/// Per-ion <1|J_x|0>_i and <1|J_y|0>_i, nominally forbidden and opened at
/// order delta_q by the crystal-field perturbation of the other cluster
/// ions.
struct IonDriveMatrixElements {
  double delta_q = 0.05;
  std::vector<std::complex<double>> jx;
  std::vector<std::complex<double>> jy;
};

/// Default site-dependent pattern: the in-plane component of the summed
/// perturbing-neighbor directions sum_{j != i} (r_j - r_i)/|r_j - r_i|^3,
/// scaled by delta_q. It inherits the cluster point symmetry.
IonDriveMatrixElements default_drive_elements(const ClusterSpec& spec,
                                              double delta_q = 0.05);

/// Full-space drive operator sum_i g_i sigma_i^+ + h.c. with
/// g_i = h_x <1|J_x|0>_i + h_y <1|J_y|0>_i.
Eigen::MatrixXcd drive_operator(const ClusterSpec& spec,
                                const IonDriveMatrixElements& elements,
                                std::complex<double> h_x,
                                std::complex<double> h_y);

// ---------------------------------------------------------------------------
// Doublet frame
// ---------------------------------------------------------------------------

/// Qubit basis for drive operations: the complex symmetry-adapted doublet
/// pair d_plus = (v1 - i v2)/sqrt(2), d_minus = (v1 + i v2)/sqrt(2) built
/// from the real-gauge E columns (v1, v2). In this basis the refocusing
/// gate (sigma_y of the real gauge, which flips the sign of any real
/// exchange block under conjugation) is diagonal: diag(-1, 1).
struct DoubletFrame {
  BlockSpectrum bs;  // labeled spectrum
  int doublet_M = 1;
  int col1 = 0, col2 = 0;
  Eigen::VectorXcd d_plus, d_minus;  // full 2^N space

  double eps_d() const { return bs.energies[doublet_M][col1]; }
  double eps_gs() const { return bs.energies[0][0]; }
};

/// Locate the alpha-th E doublet in block M of a labeled spectrum; throws
/// "doublet not found" otherwise.
DoubletFrame make_doublet_frame(const BlockSpectrum& labeled, int M = 1,
                                int alpha = 0);

/// Effective couplings (A_h, B_h) of the GS -> doublet drive for a given
/// polarization (envelope factored out): M_eff = (A|d+> + B|d->)<GS| + h.c.
/// Requires doublet_M == 1 so the doublet has a one-excitation amplitude
/// decomposition psi_k(i).
std::pair<std::complex<double>, std::complex<double>> effective_drive_coupling(
    const DoubletFrame& frame, const IonDriveMatrixElements& elements,
    std::complex<double> h_x, std::complex<double> h_y);

/// Polarization (h_x, h_y) that zeroes the coupling to one doublet
/// component (suppress = 0 zeroes A_h, 1 zeroes B_h), unit-normalized.
std::pair<std::complex<double>, std::complex<double>> selective_polarization(
    const DoubletFrame& frame, const IonDriveMatrixElements& elements,
    int suppress);

// ---------------------------------------------------------------------------
// Pulse simulation on the full cluster space
// ---------------------------------------------------------------------------

struct DriveSpec {
  std::complex<double> h_x{1.0, 0.0};
  std::complex<double> h_y{0.0, 0.0};
  double omega = 0.0;     // carrier
  double rabi = 0.0;      // envelope amplitude Omega_0 (rectangular)
  double duration = 0.0;
  double phase = 0.0;     // carrier phase
  double delay_before = 0.0;  // free evolution before the pulse
};

struct PulseOutcome {
  Eigen::VectorXcd state;  // lab frame, full 2^N space
  double norm_error = 0.0;
  std::vector<std::string> warnings;  // RWA violation etc.
};

/// Evolve psi0 (lab frame, t = start_time) through one rectangular pulse:
/// rotating-frame Hamiltonian H_cl - omega M + rabi * V(h e^{i phase}),
/// integrated exactly; the returned state is back in the lab frame.
PulseOutcome simulate_pulse(const BlockSpectrum& bs,
                            const IonDriveMatrixElements& elements,
                            const DriveSpec& drive,
                            const Eigen::VectorXcd& psi0,
                            double start_time = 0.0);

/// pi / (2 |c|): duration of a pi pulse on a two-level transition with
/// effective coupling magnitude |c|.
double pi_pulse_duration(double coupling_magnitude);

// ---------------------------------------------------------------------------
// Preparation and gates
// ---------------------------------------------------------------------------

struct PreparationReport {
  Eigen::VectorXcd final_state;
  Eigen::Vector2cd doublet_amplitudes;  // on (d_plus, d_minus)
  double fidelity = 0.0;  // overlap^2 with the predicted target
  double leakage = 0.0;   // population outside GS + doublet
  double intermediate_population = 0.0;  // two-pulse path only
  std::vector<std::string> warnings;
};

/// Single pi pulse GS -> doublet at omega = eps_d - eps_GS; the prepared
/// combination is (A_h, B_h)/|(A_h, B_h)|. rabi_over_gap sets the Rabi
/// rate relative to the smallest off-resonant detuning.
PreparationReport prepare_doublet(const DoubletFrame& frame,
                                  const IonDriveMatrixElements& elements,
                                  std::complex<double> h_x,
                                  std::complex<double> h_y,
                                  double rabi_over_gap = 1e-2);

/// Two sequential resonant pi pulses through the one-|e> intermediate of a
/// three-level ion model (|0>, |1>, |e> at eps_e): a z-polarized electric
/// pulse GS -> sum_i |e>_i, then an xy pulse into the doublet combination
/// selected by (h_x2, h_y2). rabi2_scale = 0 skips the second pulse.
/// aux_moment is the static z moment of |e>; its dipolar shifts detune
/// multiply excited configurations so that only the first excitation is
/// resonant. Throws "sequential pulses required" for a negative
/// inter-pulse gap.
PreparationReport two_pulse_preparation(const DoubletFrame& frame,
                                        const IonDriveMatrixElements& elements,
                                        double eps_e,
                                        std::complex<double> h_x2,
                                        std::complex<double> h_y2,
                                        double rabi_over_gap = 1e-2,
                                        double rabi2_scale = 1.0,
                                        double pulse_gap = 0.0,
                                        double aux_moment = 3.0);

struct GateReport {
  Eigen::Matrix2cd achieved;  // map on (d_plus, d_minus), lab frame
  Eigen::Matrix2cd target;
  double fidelity = 0.0;  // |tr(target^dag achieved)/2|^2
  double leakage = 0.0;   // max population left outside the doublet
  std::vector<std::string> warnings;
};

/// The refocusing gate of the dephasing sequences expressed in the
/// (d_plus, d_minus) frame: conjugation flips the sign of every real-gauge
/// exchange block.
Eigen::Matrix2cd sigma_y_gate();

/// Four-pulse gate through two M=2 singlets: two circular-polarization pi
/// pulses park the doublet components in spectrally resolved M=2 states,
/// and two return pulses bring them back, swapped for anti-diagonal
/// targets; the relative phase is tuned by the delay before the return
/// pulses. Targets must be diagonal or anti-diagonal in the
/// (d_plus, d_minus) frame; throws "gate synthesis infeasible for this
/// geometry" when no usable singlet pair exists.
GateReport four_pulse_gate(const DoubletFrame& frame,
                           const IonDriveMatrixElements& elements,
                           const Eigen::Matrix2cd& target,
                           double rabi_over_gap = 1e-2);

}  // namespace symcluster
