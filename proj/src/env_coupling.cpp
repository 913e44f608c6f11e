#include "symcluster/env_coupling.hpp"

#include <cmath>
#include <stdexcept>

namespace symcluster {

double clock_field(const HyperfineSpecies& s) {
  if (s.g_mu == 0.0) throw std::invalid_argument("clock_field: g_J mu_B = 0");
  return -s.a_hf * s.i_z / s.g_mu;
}

DressedSpecies dress_species(const HyperfineSpecies& s) {
  if (!(s.delta > 0.0)) throw std::invalid_argument("dress_species: gap <= 0");
  double h = (s.a_hf * s.i_z + s.g_mu * s.b_z) * s.jz_me + s.delta_h;
  DressedSpecies d;
  d.delta_tilde = std::hypot(s.delta, h);
  d.m_d = std::abs(h) / d.delta_tilde;
  d.m_od = s.delta / d.delta_tilde;
  return d;
}

NeighborIon make_neighbor(const Vec3& position_from_barycenter,
                          const HyperfineSpecies& species, double bare_m_z) {
  DressedSpecies d = dress_species(species);
  NeighborIon ion;
  ion.position = position_from_barycenter;
  ion.delta0 = d.delta_tilde;
  ion.m_z = d.m_od * bare_m_z;
  ion.species = species;
  return ion;
}

namespace {

// <to| sum_i w_i sigma_i^(+-) |from> on the block eigenbasis
double weighted_transition(const BlockSpectrum& bs, const Eigen::VectorXd& w,
                           const LabeledLevel& from, const LabeledLevel& to) {
  if (to.M == from.M + 1) {
    Eigen::MatrixXd raise = weighted_raise(bs, from.M, w);
    return bs.vectors[to.M].col(to.col).dot(raise *
                                            bs.vectors[from.M].col(from.col));
  }
  if (to.M == from.M - 1) {
    Eigen::MatrixXd raise = weighted_raise(bs, to.M, w);
    return bs.vectors[from.M].col(from.col).dot(raise *
                                                bs.vectors[to.M].col(to.col));
  }
  return 0.0;  // selection rule: |Delta M| != 1
}

}  // namespace

std::complex<double> exact_coupling_matrix_element(const BlockSpectrum& bs,
                                                   const NeighborIon& ion,
                                                   const LabeledLevel& from,
                                                   const LabeledLevel& to) {
  Vec3 c = bs.spec.barycenter();
  Vec3 r_abs = c + ion.position;
  Eigen::VectorXd w(bs.n());
  for (int i = 0; i < bs.n(); ++i)
    w[i] = dipole_kernel(r_abs - bs.spec.sites[i]) * bs.spec.m_z * ion.m_z;
  return weighted_transition(bs, w, from, to);
}

std::vector<double> multipole_eff_coupling(const BlockSpectrum& bs,
                                           const NeighborIon& ion,
                                           const LabeledLevel& from,
                                           const LabeledLevel& to,
                                           int max_order) {
  if (ion.position.norm() <= bs.spec.radius())
    throw std::invalid_argument("expansion invalid: ion inside cluster radius");
  Vec3 c = bs.spec.barycenter();
  static thread_local DipoleKernelDerivatives deriv;

  // D(R - u_i) = sum_{abc} (-u_x)^a (-u_y)^b (-u_z)^c d^{abc} D(R) / a!b!c!
  std::vector<double> out;
  double factorial[13] = {1};
  for (int i = 1; i <= 12; ++i) factorial[i] = factorial[i - 1] * i;
  for (int order = 0; order <= max_order; ++order) {
    double term = 0.0;
    for (int a = 0; a <= order; ++a)
      for (int b = 0; a + b <= order; ++b) {
        int cc = order - a - b;
        double d = deriv.evaluate(a, b, cc, ion.position) /
                   (factorial[a] * factorial[b] * factorial[cc]);
        if (d == 0.0) continue;
        Eigen::VectorXd w(bs.n());
        for (int i = 0; i < bs.n(); ++i) {
          Vec3 u = bs.spec.sites[i] - c;
          double mono = 1.0;
          for (int p = 0; p < a; ++p) mono *= -u.x();
          for (int p = 0; p < b; ++p) mono *= -u.y();
          for (int p = 0; p < cc; ++p) mono *= -u.z();
          w[i] = d * mono * bs.spec.m_z * ion.m_z;
        }
        term += weighted_transition(bs, w, from, to);
      }
    out.push_back(term);
  }
  return out;
}

int lowest_multipole_order(const std::vector<double>& per_order,
                           double rel_tol) {
  double scale = 0.0;
  for (double v : per_order) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return -1;
  for (int n = 0; n < int(per_order.size()); ++n)
    if (std::abs(per_order[n]) > rel_tol * scale) return n;
  return -1;
}

double t1_rate(double j_eff, double j_bar, double kappa_s) {
  if (!(j_bar > 0.0)) throw std::invalid_argument("t1_rate: J_bar <= 0");
  double x = j_eff / j_bar;
  return x * x * kappa_s;
}

double t1_rate_scaling(double rho, double a_cl, int nu, double kappa_s) {
  if (!(rho > 0.0)) throw std::invalid_argument("t1_rate_scaling: rho <= 0");
  double r_typ = std::pow(rho, -1.0 / 3.0);
  double j_ratio = rho;  // J_typ / J_bar with J_typ = rho * J_bar
  return j_ratio * j_ratio * std::pow(a_cl / r_typ, 2.0 * nu) * kappa_s;
}

FitResult fit_nu(const BlockSpectrum& bs, const LabeledLevel& from,
                 const LabeledLevel& to, const Vec3& dir, double r_min,
                 double r_max, int n_samples, double ion_m_z) {
  Vec3 n = dir.normalized();
  std::vector<std::pair<double, double>> samples;
  for (int i = 0; i < n_samples; ++i) {
    double r = r_min * std::pow(r_max / r_min, double(i) / (n_samples - 1));
    NeighborIon ion;
    ion.position = r * n;
    ion.m_z = ion_m_z;
    double v = std::abs(exact_coupling_matrix_element(bs, ion, from, to));
    samples.push_back({r, v});
  }
  return fit_power_law(samples);
}

}  // namespace symcluster
