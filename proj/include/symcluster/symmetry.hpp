#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "symcluster/cluster.hpp"

namespace symcluster {

struct GroupElement {
  std::vector<int> site_permutation;  // site i of input maps to site_permutation[i]
  Eigen::Matrix3d coord_matrix;
};

/// A real (Mulliken-labeled) irrep of a cyclic group: one-dimensional
/// characters, or the two-dimensional merge of a conjugate complex pair.
struct RealIrrep {
  std::string name;
  int dim = 1;
  std::vector<int> ks;      // contributing complex characters k (1 or 2 of them)
  Eigen::VectorXd chars;    // real characters per element
};

/// Abelian point group generated by one element (C2, C3, C4, S4). Complex
/// irreps are chi_k(g^j) = exp(2 pi i k j / n); conjugate pairs present as
/// real two-dimensional E labels.
struct PointGroup {
  std::string name;
  std::vector<GroupElement> elements;  // identity first, then generator powers
  std::vector<RealIrrep> real_irreps;

  int order() const { return int(elements.size()); }
  const GroupElement& generator() const { return elements[1]; }
  std::complex<double> complex_character(int k, int element) const;
  const RealIrrep& irrep(const std::string& name) const;
  /// name of the real irrep containing complex character k
  const std::string& irrep_of_k(int k) const;
};

/// Cyclic group from an explicit generator; closes under composition and
/// checks that the permutation is consistent with the coordinate matrix on
/// the given sites (to 1e-9).
PointGroup make_cyclic_group(const std::string& name,
                             std::vector<int> generator_permutation,
                             const Eigen::Matrix3d& generator_matrix,
                             const std::vector<Vec3>& sites);

/// Standard generator for C2/C3/C4/S4 about the z axis; the site permutation
/// is inferred by matching transformed positions.
PointGroup standard_group(const std::string& name, const ClusterSpec& spec);

/// Site-permutation operator on the 2^N bitstring space.
Eigen::MatrixXcd permutation_unitary(const GroupElement& g, int n_sites);

/// Apply the permutation operator to a full-space vector without
/// materializing the matrix.
Eigen::VectorXd apply_site_permutation(const GroupElement& g, int n_sites,
                                       const Eigen::VectorXd& v);

/// True when the generator commutes with the secular Hamiltonian of `spec`
/// to 1e-12 of its norm.
bool is_symmetry_of(const PointGroup& group, const ClusterSpec& spec);

/// Label the eigenstates of each degenerate energy group by irreps of the
/// (verified) symmetry group; rewrites degenerate eigenvector columns in a
/// deterministic real gauge. Copy indices alpha count ascending in energy.
BlockSpectrum label_levels(const ClusterSpec& spec, const PointGroup& group,
                           const BlockSpectrum& spectrum);

/// Multiplicities of the real irreps in a representation with the given
/// per-element characters. Throws if any multiplicity is not a
/// non-negative integer.
std::map<std::string, int> decompose_representation(
    const PointGroup& group, const Eigen::VectorXcd& characters);

/// Characters of Gamma_n = Gamma_{J_z} (x) Sym^n(Gamma_r). Gamma_{J_z} is
/// computed operationally from the transformation of sum_i J_i^z under the
/// site permutation (trivial for permutation action on sigma^x sums).
Eigen::VectorXcd multipole_representation(const PointGroup& group, int order);

struct ExponentPrediction {
  int nu = 0;
  int xi = 0;
  std::string witness;  // irrep pair and intermediate satisfying the rules
};

/// Selection-rule prediction of the multipole decay exponent nu and the
/// ring-exchange suppression exponent xi for a doublet at manifold
/// `doublet_M`, given the irrep content of the reachable manifolds.
ExponentPrediction predict_exponents(
    const PointGroup& group, const std::string& doublet_irrep,
    const std::string& gs_irrep,
    const std::map<int, std::vector<std::string>>& irreps_by_M, int doublet_M,
    int max_total_order = 4);

}  // namespace symcluster
