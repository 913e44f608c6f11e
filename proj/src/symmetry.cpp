#include "symcluster/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace symcluster {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Matrix3d rotation_z(double angle) {
  Eigen::Matrix3d r;
  r << std::cos(angle), -std::sin(angle), 0.0,
       std::sin(angle),  std::cos(angle), 0.0,
       0.0, 0.0, 1.0;
  return r;
}

std::vector<RealIrrep> cyclic_real_irreps(int n) {
  std::vector<RealIrrep> irreps;
  auto chars_of_k = [n](int k) {
    Eigen::VectorXd c(n);
    for (int j = 0; j < n; ++j) c[j] = std::cos(2.0 * kPi * k * j / n);
    return c;
  };
  irreps.push_back({"A", 1, {0}, chars_of_k(0)});
  if (n % 2 == 0) irreps.push_back({"B", 1, {n / 2}, chars_of_k(n / 2)});
  int n_pairs = (n - 1) / 2;
  for (int k = 1; k <= n_pairs; ++k) {
    RealIrrep e;
    e.name = n_pairs == 1 ? "E" : "E" + std::to_string(k);
    e.dim = 2;
    e.ks = {k, n - k};
    e.chars = 2.0 * chars_of_k(k);
    irreps.push_back(std::move(e));
  }
  return irreps;
}

}  // namespace

std::complex<double> PointGroup::complex_character(int k, int element) const {
  double phase = 2.0 * kPi * k * element / order();
  return {std::cos(phase), std::sin(phase)};
}

const RealIrrep& PointGroup::irrep(const std::string& nm) const {
  for (const auto& ir : real_irreps)
    if (ir.name == nm) return ir;
  throw std::invalid_argument("unknown irrep " + nm + " of group " + name);
}

const std::string& PointGroup::irrep_of_k(int k) const {
  k = ((k % order()) + order()) % order();
  for (const auto& ir : real_irreps)
    for (int kk : ir.ks)
      if (kk == k) return ir.name;
  throw std::logic_error("character index out of range");
}

PointGroup make_cyclic_group(const std::string& name,
                             std::vector<int> generator_permutation,
                             const Eigen::Matrix3d& generator_matrix,
                             const std::vector<Vec3>& sites) {
  const int n_sites = int(sites.size());
  if (int(generator_permutation.size()) != n_sites)
    throw std::invalid_argument("generator permutation size mismatch");

  // consistency: permuted positions equal transformed positions (about the
  // barycenter) to 1e-9
  Vec3 c = Vec3::Zero();
  for (const Vec3& s : sites) c += s;
  c /= double(n_sites);
  for (int i = 0; i < n_sites; ++i) {
    Vec3 expect = generator_matrix * (sites[i] - c) + c;
    if ((expect - sites[generator_permutation[i]]).norm() > 1e-9)
      throw std::invalid_argument(
          "generator permutation inconsistent with coordinate matrix");
  }

  PointGroup g;
  g.name = name;
  std::vector<int> perm(n_sites);
  for (int i = 0; i < n_sites; ++i) perm[i] = i;
  Eigen::Matrix3d mat = Eigen::Matrix3d::Identity();
  for (int pow = 0; pow < 64; ++pow) {
    g.elements.push_back({perm, mat});
    std::vector<int> next(n_sites);
    for (int i = 0; i < n_sites; ++i) next[i] = generator_permutation[perm[i]];
    mat = generator_matrix * mat;
    perm = next;
    bool ident = std::is_sorted(perm.begin(), perm.end()) &&
                 (mat - Eigen::Matrix3d::Identity()).norm() < 1e-9;
    if (ident) break;
    if (pow == 63) throw std::invalid_argument("generator does not close");
  }
  g.real_irreps = cyclic_real_irreps(g.order());
  return g;
}

PointGroup standard_group(const std::string& name, const ClusterSpec& spec) {
  Eigen::Matrix3d mat;
  if (name == "C1") {
    mat = Eigen::Matrix3d::Identity();
  } else if (name == "C2") {
    mat = rotation_z(kPi);
  } else if (name == "C3") {
    mat = rotation_z(2.0 * kPi / 3.0);
  } else if (name == "C4") {
    mat = rotation_z(kPi / 2.0);
  } else if (name == "S4") {
    mat = rotation_z(kPi / 2.0);
    mat.col(2) *= -1.0;
    mat.row(2) *= -1.0;
    mat(2, 2) = -1.0;
  } else {
    throw std::invalid_argument("unsupported group " + name);
  }
  // infer the site permutation by matching transformed positions
  Vec3 c = spec.barycenter();
  std::vector<int> perm(spec.n(), -1);
  for (int i = 0; i < spec.n(); ++i) {
    Vec3 target = mat * (spec.sites[i] - c) + c;
    for (int j = 0; j < spec.n(); ++j) {
      if ((target - spec.sites[j]).norm() < 1e-9) {
        perm[i] = j;
        break;
      }
    }
    if (perm[i] < 0)
      throw std::invalid_argument(name + " is not a symmetry of the geometry");
  }
  if (name == "C1") {
    PointGroup g;
    g.name = name;
    g.elements.push_back({perm, mat});
    g.real_irreps = {{"A", 1, {0}, Eigen::VectorXd::Ones(1)}};
    return g;
  }
  return make_cyclic_group(name, perm, mat, spec.sites);
}

Eigen::MatrixXcd permutation_unitary(const GroupElement& g, int n_sites) {
  if (int(g.site_permutation.size()) != n_sites)
    throw std::invalid_argument("permutation size mismatch");
  const int dim = 1 << n_sites;
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(dim, dim);
  for (int s = 0; s < dim; ++s) {
    int t = 0;
    for (int i = 0; i < n_sites; ++i)
      if ((s >> i) & 1) t |= 1 << g.site_permutation[i];
    u(t, s) = 1.0;
  }
  return u;
}

Eigen::VectorXd apply_site_permutation(const GroupElement& g, int n_sites,
                                       const Eigen::VectorXd& v) {
  const int dim = 1 << n_sites;
  Eigen::VectorXd out(dim);
  for (int s = 0; s < dim; ++s) {
    int t = 0;
    for (int i = 0; i < n_sites; ++i)
      if ((s >> i) & 1) t |= 1 << g.site_permutation[i];
    out[t] = v[s];
  }
  return out;
}

bool is_symmetry_of(const PointGroup& group, const ClusterSpec& spec) {
  const GroupElement& gen = group.order() > 1 ? group.generator()
                                              : group.elements.front();
  if (int(gen.site_permutation.size()) != spec.n()) return false;
  const auto& perm = gen.site_permutation;
  double scale = std::abs(spec.delta_cl);
  for (int i = 0; i < spec.n(); ++i)
    for (int j = i + 1; j < spec.n(); ++j)
      scale = std::max(scale, std::abs(spec.coupling(i, j)));
  if (scale == 0.0) scale = 1.0;
  for (int i = 0; i < spec.n(); ++i)
    for (int j = i + 1; j < spec.n(); ++j)
      if (std::abs(spec.coupling(i, j) - spec.coupling(perm[i], perm[j])) >
          1e-12 * scale)
        return false;
  return true;
}

namespace {

// permutation of block-state indices induced by a group element
std::vector<int> block_permutation(const GroupElement& g,
                                   const std::vector<int>& states,
                                   int n_sites) {
  std::map<int, int> index;
  for (int a = 0; a < int(states.size()); ++a) index[states[a]] = a;
  std::vector<int> out(states.size());
  for (int a = 0; a < int(states.size()); ++a) {
    int s = states[a], t = 0;
    for (int i = 0; i < n_sites; ++i)
      if ((s >> i) & 1) t |= 1 << g.site_permutation[i];
    out[a] = index.at(t);
  }
  return out;
}

// deterministic orthonormal basis of the column span of P (rank m),
// pivoting on bitstring rows in index order
Eigen::MatrixXd canonical_subspace_basis(const Eigen::MatrixXd& span, int m) {
  Eigen::MatrixXd proj = span * span.transpose();
  Eigen::MatrixXd basis(span.rows(), m);
  int found = 0;
  for (int r = 0; r < span.rows() && found < m; ++r) {
    Eigen::VectorXd v = proj.col(r);
    for (int c = 0; c < found; ++c) v -= basis.col(c).dot(v) * basis.col(c);
    double nrm = v.norm();
    if (nrm > 1e-8) {
      basis.col(found) = v / nrm;
      // sign: first sizable component positive
      for (int rr = 0; rr < basis.rows(); ++rr) {
        if (std::abs(basis(rr, found)) > 1e-10) {
          if (basis(rr, found) < 0.0) basis.col(found) *= -1.0;
          break;
        }
      }
      ++found;
    }
  }
  if (found != m) throw std::logic_error("degenerate subspace rank deficient");
  return basis;
}

}  // namespace

BlockSpectrum label_levels(const ClusterSpec& spec, const PointGroup& group,
                           const BlockSpectrum& spectrum) {
  if (!is_symmetry_of(group, spec))
    throw std::invalid_argument("group is not a symmetry of the cluster spec");

  BlockSpectrum out = spectrum;
  const int n = spec.n();
  const int order = group.order();
  const GroupElement& gen =
      order > 1 ? group.generator() : group.elements.front();

  for (int M = 0; M <= n; ++M) {
    const auto& states = out.block_states[M];
    auto perm = block_permutation(gen, states, n);
    auto groups = out.degenerate_groups(M);
    for (const auto& cols : groups) {
      const int m = int(cols.size());
      Eigen::MatrixXd sub(states.size(), m);
      for (int c = 0; c < m; ++c) sub.col(c) = out.vectors[M].col(cols[c]);
      // generator restricted to the degenerate subspace
      Eigen::MatrixXd permuted(states.size(), m);
      for (int a = 0; a < int(states.size()); ++a)
        permuted.row(perm[a]) = sub.row(a);
      Eigen::MatrixXcd u_sub = (sub.transpose() * permuted).cast<std::complex<double>>();
      Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(u_sub);

      // bucket eigenvectors by their root-of-unity index k
      std::map<int, std::vector<Eigen::VectorXcd>> by_k;
      for (int c = 0; c < m; ++c) {
        std::complex<double> lam = ces.eigenvalues()[c];
        double arg = std::arg(lam);
        int k = int(std::lround(arg * order / (2.0 * kPi)));
        k = ((k % order) + order) % order;
        if (std::abs(lam - group.complex_character(k, 1)) > 1e-6)
          throw std::runtime_error("symmetry broken or tolerance too tight");
        by_k[k].push_back(ces.eigenvectors().col(c));
      }

      // rebuild the degenerate columns: 1-d irreps as sign-fixed real
      // vectors, conjugate pairs as canonical real doublet bases
      struct Piece {
        std::string name;
        int dim;
        Eigen::MatrixXd basis;  // full-block coordinates
      };
      std::vector<Piece> pieces;
      for (auto& [k, vecs] : by_k) {
        int kc = (order - k) % order;
        const std::string& nm = group.irrep_of_k(k);
        if (kc == k) {  // real character, lambda = +-1
          for (auto& v : vecs) {
            // rotate the phase away and take the real part
            int imax = 0;
            for (int r = 1; r < m; ++r)
              if (std::abs(v[r]) > std::abs(v[imax])) imax = r;
            Eigen::VectorXcd w = v * (std::conj(v[imax]) / std::abs(v[imax]));
            Eigen::VectorXd rv = w.real();
            rv.normalize();
            Eigen::MatrixXd full = sub * rv;
            pieces.push_back({nm, 1, canonical_subspace_basis(full, 1)});
          }
        } else if (k < kc) {  // one piece per conjugate pair
          for (auto& v : vecs) {
            Eigen::MatrixXd plane(states.size(), 2);
            plane.col(0) = sub * v.real();
            plane.col(1) = sub * v.imag();
            pieces.push_back({nm, 2, canonical_subspace_basis(plane, 2)});
          }
        }
      }
      std::stable_sort(pieces.begin(), pieces.end(),
                       [](const Piece& a, const Piece& b) { return a.name < b.name; });

      int c = 0;
      for (const auto& p : pieces) {
        for (int d = 0; d < p.dim; ++d, ++c) {
          int col = cols[c];
          out.vectors[M].col(col) = p.basis.col(d);
          out.levels[M][col].irrep = p.name;
          out.levels[M][col].dim = p.dim;
          out.levels[M][col].k = d;
        }
      }
    }
    // copy indices per irrep name, ascending energy
    std::map<std::string, int> alpha_count;
    for (int col = 0; col < int(states.size()); ++col) {
      auto& lv = out.levels[M][col];
      if (lv.k == 0) alpha_count[lv.irrep] += 1;
      lv.alpha = alpha_count[lv.irrep] - 1;
    }
  }
  return out;
}

std::map<std::string, int> decompose_representation(
    const PointGroup& group, const Eigen::VectorXcd& characters) {
  const int n = group.order();
  if (characters.size() != n)
    throw std::invalid_argument("character vector size mismatch");
  double dim0 = characters[0].real();
  if (std::abs(characters[0].imag()) > 1e-6 ||
      std::abs(dim0 - std::lround(dim0)) > 1e-6 || dim0 < -1e-6)
    throw std::invalid_argument("not a representation of this group");

  std::map<int, int> mult_k;
  for (int k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (int j = 0; j < n; ++j)
      acc += std::conj(group.complex_character(k, j)) * characters[j];
    acc /= double(n);
    long m = std::lround(acc.real());
    if (std::abs(acc.imag()) > 1e-6 || std::abs(acc.real() - m) > 1e-6 || m < 0)
      throw std::invalid_argument("not a representation of this group");
    mult_k[k] = int(m);
  }
  std::map<std::string, int> out;
  for (const auto& ir : group.real_irreps) {
    int m = mult_k[ir.ks[0]];
    for (int kk : ir.ks)
      if (mult_k[kk] != m)
        throw std::invalid_argument(
            "not a real representation: unpaired complex irreps");
    if (m > 0) out[ir.name] = m;
  }
  return out;
}

Eigen::VectorXcd multipole_representation(const PointGroup& group, int order) {
  const int n = group.order();
  // Gamma_{J_z} operationally: the permutation action maps sum_i J_i^z to
  // itself, so its character is 1 for every element.
  Eigen::VectorXd jz = Eigen::VectorXd::Ones(n);

  // characters of Sym^m(Gamma_r) by the Newton recursion
  std::vector<Eigen::VectorXd> sym(order + 1, Eigen::VectorXd::Ones(n));
  std::vector<Eigen::VectorXd> power_sums(order + 1, Eigen::VectorXd::Zero(n));
  for (int k = 1; k <= order; ++k)
    for (int j = 0; j < n; ++j) {
      Eigen::Matrix3d mk = Eigen::Matrix3d::Identity();
      for (int p = 0; p < k; ++p) mk = group.elements[j].coord_matrix * mk;
      power_sums[k][j] = mk.trace();
    }
  for (int m = 1; m <= order; ++m) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
    for (int k = 1; k <= m; ++k)
      h += power_sums[k].cwiseProduct(sym[m - k]);
    sym[m] = h / double(m);
  }
  return (jz.cwiseProduct(sym[order])).cast<std::complex<double>>();
}

namespace {

bool contains_trivial(const PointGroup& group, const Eigen::VectorXcd& chars) {
  std::complex<double> acc = 0.0;
  for (int j = 0; j < group.order(); ++j) acc += chars[j];
  return std::lround(acc.real() / group.order()) >= 1;
}

Eigen::VectorXcd to_c(const Eigen::VectorXd& v) {
  return v.cast<std::complex<double>>();
}

}  // namespace

ExponentPrediction predict_exponents(
    const PointGroup& group, const std::string& doublet_irrep,
    const std::string& gs_irrep,
    const std::map<int, std::vector<std::string>>& irreps_by_M, int doublet_M,
    int max_total_order) {
  const RealIrrep& gd = group.irrep(doublet_irrep);
  if (gd.dim != 2)
    throw std::invalid_argument("predict_exponents expects a doublet irrep");
  const Eigen::VectorXcd chi_d = to_c(gd.chars);
  const Eigen::VectorXcd chi_gs = to_c(group.irrep(gs_irrep).chars);

  ExponentPrediction pred;
  pred.nu = -1;
  for (int n = 0; n <= max_total_order; ++n) {
    Eigen::VectorXcd chi_n = multipole_representation(group, n);
    if (contains_trivial(group,
                         chi_gs.cwiseProduct(chi_n).cwiseProduct(chi_d))) {
      pred.nu = n;
      break;
    }
  }
  if (pred.nu < 0)
    throw std::runtime_error("exponent beyond implemented order");

  // irreps available as intermediates in the M +- 1 manifolds
  std::vector<std::string> intermediates;
  for (int dm : {-1, +1}) {
    auto it = irreps_by_M.find(doublet_M + dm);
    if (it == irreps_by_M.end()) continue;
    for (const auto& nm : it->second)
      if (std::find(intermediates.begin(), intermediates.end(), nm) ==
          intermediates.end())
        intermediates.push_back(nm);
  }

  std::vector<std::map<std::string, int>> content(max_total_order + 1);
  for (int t = 0; t <= max_total_order; ++t)
    content[t] =
        decompose_representation(group, multipole_representation(group, t));

  for (int total = 1; total <= max_total_order; ++total) {
    for (int n = 0; n <= total; ++n) {
      int m = total - n;
      for (const auto& [na, ma] : content[n]) {
        const RealIrrep& a = group.irrep(na);
        for (const auto& [nb, mb] : content[m]) {
          const RealIrrep& b = group.irrep(nb);
          // condition 3: the pair must act non-trivially on the doublet
          if (a.dim == 1 && b.dim == 1) {
            bool is_trivial_product = true;
            for (int j = 0; j < group.order(); ++j)
              if (std::abs(a.chars[j] * b.chars[j] - 1.0) > 1e-9)
                is_trivial_product = false;
            if (is_trivial_product) continue;
          }
          // condition 1: nonzero matrix elements within the doublet
          Eigen::VectorXcd prod = chi_d.cwiseProduct(to_c(a.chars))
                                      .cwiseProduct(to_c(b.chars))
                                      .cwiseProduct(chi_d);
          if (!contains_trivial(group, prod)) continue;
          // condition 2: a shared intermediate irrep in M +- 1
          for (const auto& ip : intermediates) {
            const Eigen::VectorXcd chi_p = to_c(group.irrep(ip).chars);
            if (contains_trivial(group, chi_d.cwiseProduct(to_c(a.chars))
                                            .cwiseProduct(chi_p)) &&
                contains_trivial(group, chi_d.cwiseProduct(to_c(b.chars))
                                            .cwiseProduct(chi_p))) {
              pred.xi = total;
              pred.witness = "(" + na + " at order " + std::to_string(n) +
                             ", " + nb + " at order " + std::to_string(m) +
                             ") via " + ip;
              return pred;
            }
          }
        }
      }
    }
  }
  throw std::runtime_error("exponent beyond implemented order");
}

}  // namespace symcluster
