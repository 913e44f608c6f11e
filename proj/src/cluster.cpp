#include "symcluster/cluster.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace symcluster {

namespace {

std::pair<int, int> ordered(int i, int j) {
  return i < j ? std::pair{i, j} : std::pair{j, i};
}

}  // namespace

double dipolar_coupling(const Vec3& ri, const Vec3& rj, double m_z,
                        double exchange) {
  Vec3 d = rj - ri;
  if (d.squaredNorm() < 1e-24)
    throw std::invalid_argument("dipolar_coupling: degenerate geometry");
  return dipole_kernel(d) * m_z * m_z + exchange;
}

double ClusterSpec::coupling(int i, int j) const {
  auto key = ordered(i, j);
  if (auto it = coupling_overrides.find(key); it != coupling_overrides.end())
    return it->second;
  double ex = 0.0;
  if (auto it = exchange_overrides.find(key); it != exchange_overrides.end())
    ex = it->second;
  return dipolar_coupling(sites[i], sites[j], m_z, ex);
}

Vec3 ClusterSpec::barycenter() const {
  Vec3 c = Vec3::Zero();
  for (const Vec3& s : sites) c += s;
  return c / double(sites.size());
}

double ClusterSpec::radius() const {
  Vec3 c = barycenter();
  double r = 0.0;
  for (const Vec3& s : sites) r = std::max(r, (s - c).norm());
  return r;
}

void ClusterSpec::validate() const {
  if (sites.empty()) throw std::invalid_argument("cluster needs at least one site");
  if (n() > kMaxSites) throw std::invalid_argument("dimension cap exceeded");
  for (int i = 0; i < n(); ++i)
    for (int j = i + 1; j < n(); ++j)
      if ((sites[i] - sites[j]).squaredNorm() < 1e-24)
        throw std::invalid_argument("degenerate geometry: coincident sites");
}

bool is_hermitian(const Eigen::MatrixXcd& a, double rel_tol) {
  double scale = a.norm();
  if (scale == 0.0) return true;
  return (a - a.adjoint()).norm() <= rel_tol * scale;
}

namespace {

// diagonal Delta part plus flip-flop hoppings within each popcount sector
Eigen::MatrixXd build_hamiltonian(const ClusterSpec& spec, bool secular) {
  spec.validate();
  const int n = spec.n();
  const int dim = 1 << n;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (int s = 0; s < dim; ++s)
    h(s, s) = 0.5 * spec.delta_cl * (2.0 * std::popcount(unsigned(s)) - n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double J = spec.coupling(i, j);
      if (J == 0.0) continue;
      for (int s = 0; s < dim; ++s) {
        bool bi = (s >> i) & 1, bj = (s >> j) & 1;
        int t = s ^ (1 << i) ^ (1 << j);
        if (secular) {
          if (bi != bj) h(t, s) += J;  // s+_i s-_j + s-_i s+_j
        } else {
          // 1/2 J sx_i sx_j summed over ordered pairs = J sx_i sx_j per bond;
          // sx_i sx_j flips both spins regardless of their state
          h(t, s) += J;
        }
      }
    }
  }
  return h;
}

}  // namespace

Eigen::MatrixXd build_secular_hamiltonian(const ClusterSpec& spec) {
  return build_hamiltonian(spec, true);
}

Eigen::MatrixXd build_full_xx_hamiltonian(const ClusterSpec& spec) {
  return build_hamiltonian(spec, false);
}

EigDecomposition eig_hermitian(const Eigen::MatrixXcd& op) {
  if (op.rows() != op.cols())
    throw std::invalid_argument("eig_hermitian: square matrix required");
  if (!is_hermitian(op))
    throw std::invalid_argument("eig_hermitian: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      0.5 * (op + op.adjoint()));
  EigDecomposition out{solver.eigenvalues(), solver.eigenvectors()};
  // gauge: first nonzero component real positive
  for (int c = 0; c < out.vectors.cols(); ++c) {
    for (int r = 0; r < out.vectors.rows(); ++r) {
      std::complex<double> v = out.vectors(r, c);
      if (std::abs(v) > 1e-10) {
        out.vectors.col(c) *= std::conj(v) / std::abs(v);
        break;
      }
    }
  }
  return out;
}

EigDecompositionReal eig_symmetric(const Eigen::MatrixXd& op) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      0.5 * (op + op.transpose()));
  EigDecompositionReal out{solver.eigenvalues(), solver.eigenvectors()};
  for (int c = 0; c < out.vectors.cols(); ++c) {
    for (int r = 0; r < out.vectors.rows(); ++r) {
      if (std::abs(out.vectors(r, c)) > 1e-10) {
        if (out.vectors(r, c) < 0.0) out.vectors.col(c) *= -1.0;
        break;
      }
    }
  }
  return out;
}

std::vector<std::vector<int>> enumerate_blocks(int n_sites) {
  std::vector<std::vector<int>> blocks(n_sites + 1);
  for (int s = 0; s < (1 << n_sites); ++s)
    blocks[std::popcount(unsigned(s))].push_back(s);
  return blocks;
}

Eigen::MatrixXd block_hopping_matrix(const ClusterSpec& spec,
                                     const std::vector<int>& states) {
  const int d = int(states.size());
  std::map<int, int> index;
  for (int a = 0; a < d; ++a) index[states[a]] = a;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  const int n = spec.n();
  for (int a = 0; a < d; ++a) {
    int s = states[a];
    for (int i = 0; i < n; ++i) {
      if (!((s >> i) & 1)) continue;
      for (int j = 0; j < n; ++j) {
        if (j == i || ((s >> j) & 1)) continue;
        int t = s ^ (1 << i) ^ (1 << j);
        h(index[t], a) += spec.coupling(i, j);
      }
    }
  }
  return h;
}

double BlockSpectrum::energy_scale() const {
  double s = 0.0;
  for (const auto& e : energies)
    if (e.size() > 0) s = std::max(s, e.cwiseAbs().maxCoeff());
  return s > 0.0 ? s : 1.0;
}

Eigen::VectorXd BlockSpectrum::embed(int M, int col) const {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(1 << n());
  const auto& states = block_states[M];
  for (int a = 0; a < int(states.size()); ++a)
    full[states[a]] = vectors[M](a, col);
  return full;
}

std::vector<std::vector<int>> BlockSpectrum::degenerate_groups(
    int M, double rel_tol) const {
  double tol = rel_tol * energy_scale();
  std::vector<std::vector<int>> groups;
  const auto& e = energies[M];
  for (int c = 0; c < e.size(); ++c) {
    if (groups.empty() || e[c] - e[groups.back().front()] > tol)
      groups.push_back({});
    groups.back().push_back(c);
  }
  return groups;
}

BlockSpectrum block_spectrum(const ClusterSpec& spec) {
  spec.validate();
  BlockSpectrum bs;
  bs.spec = spec;
  bs.block_states = enumerate_blocks(spec.n());
  const int n = spec.n();
  for (int M = 0; M <= n; ++M) {
    const auto& states = bs.block_states[M];
    Eigen::MatrixXd h = block_hopping_matrix(spec, states);
    double diag = 0.5 * spec.delta_cl * (2.0 * M - n);
    h.diagonal().array() += diag;
    auto eig = eig_symmetric(h);
    bs.energies.push_back(eig.values);
    bs.vectors.push_back(eig.vectors);
    std::vector<LabeledLevel> lv(states.size());
    for (int c = 0; c < int(states.size()); ++c)
      lv[c] = LabeledLevel{M, eig.values[c], "unlabeled", 1, 0, 0, c};
    bs.levels.push_back(std::move(lv));
  }
  return bs;
}

Eigen::MatrixXd weighted_raise(const BlockSpectrum& bs, int M,
                               const Eigen::VectorXd& w) {
  const auto& lo = bs.block_states[M];
  const auto& hi = bs.block_states[M + 1];
  std::map<int, int> hi_index;
  for (int a = 0; a < int(hi.size()); ++a) hi_index[hi[a]] = a;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(hi.size(), lo.size());
  for (int a = 0; a < int(lo.size()); ++a) {
    int s = lo[a];
    for (int i = 0; i < bs.n(); ++i) {
      if ((s >> i) & 1) continue;
      out(hi_index[s | (1 << i)], a) += w[i];
    }
  }
  return out;
}

}  // namespace symcluster
