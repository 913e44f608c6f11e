#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "symcluster/geometry.hpp"

namespace symcluster {

inline constexpr int kMaxSites = 12;

/// Geometry and interaction parameters of one cluster. Energies are angular
/// frequencies (hbar = 1); the dipolar scale m_z^2 / a^3 sets the unit.
struct ClusterSpec {
  std::vector<Vec3> sites;
  double delta_cl = 0.0;  // crystal-field gap
  double m_z = 1.0;       // moment matrix element along z
  // optional per-bond exchange added on top of the dipolar coupling
  std::map<std::pair<int, int>, double> exchange_overrides;
  // optional full bypass of the geometric coupling (abstract models)
  std::map<std::pair<int, int>, double> coupling_overrides;

  int n() const { return int(sites.size()); }
  double coupling(int i, int j) const;
  Vec3 barycenter() const;
  double radius() const;  // max distance of a site from the barycenter
  void validate() const;
};

/// J_ij = (1 - 3 cos^2 theta) m_z^2 / r^3 + exchange, code units.
double dipolar_coupling(const Vec3& ri, const Vec3& rj, double m_z,
                        double exchange);

// --- dense operators on the 2^N site-occupation space --------------------
// Basis: bitstrings, site 0 = least significant bit; |1> = excited.

using HermitianOperator = Eigen::MatrixXcd;

bool is_hermitian(const Eigen::MatrixXcd& a, double rel_tol = 1e-12);

/// Excitation-conserving (secular) Hamiltonian:
/// H = 1/2 sum_i Delta sigma_i^z + sum_{i<j} J_ij (s+_i s-_j + s-_i s+_j).
Eigen::MatrixXd build_secular_hamiltonian(const ClusterSpec& spec);

/// The non-secular parent, 1/2 sum Delta sigma_i^z + sum_{i<j} J_ij sx_i sx_j.
Eigen::MatrixXd build_full_xx_hamiltonian(const ClusterSpec& spec);

struct EigDecomposition {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXcd vectors; // orthonormal columns, phase-fixed
};

/// Dense Hermitian eigensolver with a deterministic gauge: eigenvalues
/// ascending, each vector's first nonzero component made real positive.
EigDecomposition eig_hermitian(const Eigen::MatrixXcd& op);

// Real-symmetric variant (sign-fixed real eigenvectors).
struct EigDecompositionReal {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};
EigDecompositionReal eig_symmetric(const Eigen::MatrixXd& op);

// --- excitation-number block structure ------------------------------------

struct LabeledLevel {
  int M = 0;
  double energy = 0.0;
  std::string irrep = "unlabeled";
  int dim = 1;    // irrep dimension
  int k = 0;      // index inside a multiplet
  int alpha = 0;  // copy index of the irrep within the M manifold
  int col = 0;    // column in the block eigenvector matrix (plumbing)
};

struct BlockSpectrum {
  ClusterSpec spec;
  std::vector<std::vector<int>> block_states;       // bitstrings per M, ascending
  std::vector<Eigen::VectorXd> energies;            // per M
  std::vector<Eigen::MatrixXd> vectors;             // per M, orthonormal columns
  std::vector<std::vector<LabeledLevel>> levels;    // per M, one per column

  int n() const { return spec.n(); }
  double energy_scale() const;
  /// Embed column `col` of block M into the full 2^N space.
  Eigen::VectorXd embed(int M, int col) const;
  /// Degenerate groups of columns within block M (tolerance rel. to scale).
  std::vector<std::vector<int>> degenerate_groups(int M, double rel_tol = 1e-8) const;
};

/// Diagonalize each M block of the secular Hamiltonian independently.
BlockSpectrum block_spectrum(const ClusterSpec& spec);

/// Matrix of sum_i w_i sigma_i^+ from block M to block M+1, in the
/// bitstring block bases (rows: M+1 states, cols: M states).
Eigen::MatrixXd weighted_raise(const BlockSpectrum& bs, int M,
                               const Eigen::VectorXd& w);

/// Hopping-only part of the block Hamiltonian (Delta term removed).
Eigen::MatrixXd block_hopping_matrix(const ClusterSpec& spec,
                                     const std::vector<int>& states);

std::vector<std::vector<int>> enumerate_blocks(int n_sites);

}  // namespace symcluster
