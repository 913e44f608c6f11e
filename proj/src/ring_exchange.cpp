#include "symcluster/ring_exchange.hpp"

#include <cmath>
#include <stdexcept>

namespace symcluster {

namespace {

Eigen::VectorXd ion_couplings(const BlockSpectrum& bs, const Vec3& r0,
                              double ion_moment) {
  Vec3 r_abs = bs.spec.barycenter() + r0;
  Eigen::VectorXd w(bs.n());
  for (int i = 0; i < bs.n(); ++i)
    w[i] = dipole_kernel(r_abs - bs.spec.sites[i]) * bs.spec.m_z * ion_moment;
  return w;
}

struct ResolventSums {
  Eigen::Matrix2d h0 = Eigen::Matrix2d::Zero();  // ion ground block
  Eigen::Matrix2d h1 = Eigen::Matrix2d::Zero();  // ion excited block
};

// second-order blocks: H^0 from gamma^(+) over psi in M-1 with denominator
// eps_d - eps_psi - Delta0, H^1 from gamma^(-) over psi in M+1 with
// denominator eps_d - eps_psi + Delta0
ResolventSums resolvent_sums(const SWContext& ctx, const Vec3& r0) {
  const BlockSpectrum& bs = ctx.bs;
  const int M = ctx.doublet_M;
  Eigen::VectorXd w = ion_couplings(bs, r0, ctx.ion_moment);
  const double eps_d = ctx.eps_d();
  const double scale = std::max(bs.energy_scale(), std::abs(ctx.delta0));

  ResolventSums out;
  Eigen::Vector2d g;
  if (M - 1 >= 0) {
    Eigen::MatrixXd raise = weighted_raise(bs, M - 1, w);
    for (int p = 0; p < int(bs.block_states[M - 1].size()); ++p) {
      Eigen::VectorXd rp = raise * bs.vectors[M - 1].col(p);
      g[0] = bs.vectors[M].col(ctx.col1).dot(rp);
      g[1] = bs.vectors[M].col(ctx.col2).dot(rp);
      double denom = eps_d - bs.energies[M - 1][p] - ctx.delta0;
      if (std::abs(denom) < ctx.denom_threshold * scale)
        throw std::runtime_error("SW denominators singular");
      out.h0 += g * g.transpose() / denom;
    }
  }
  if (M + 1 <= bs.n()) {
    Eigen::MatrixXd raise = weighted_raise(bs, M, w);
    for (int p = 0; p < int(bs.block_states[M + 1].size()); ++p) {
      g[0] = bs.vectors[M + 1].col(p).dot(raise * bs.vectors[M].col(ctx.col1));
      g[1] = bs.vectors[M + 1].col(p).dot(raise * bs.vectors[M].col(ctx.col2));
      double denom = eps_d - bs.energies[M + 1][p] + ctx.delta0;
      if (std::abs(denom) < ctx.denom_threshold * scale)
        throw std::runtime_error("SW denominators singular");
      out.h1 += g * g.transpose() / denom;
    }
  }
  return out;
}

}  // namespace

SWContext make_sw_context(const BlockSpectrum& labeled, int M,
                          const std::string& irrep, int alpha, double delta0,
                          double ion_moment) {
  SWContext ctx;
  ctx.bs = labeled;
  ctx.doublet_M = M;
  ctx.delta0 = delta0;
  ctx.ion_moment = ion_moment;
  int found = 0;
  for (const auto& lv : labeled.levels[M]) {
    if (lv.irrep == irrep && lv.alpha == alpha && lv.dim == 2) {
      (lv.k == 0 ? ctx.col1 : ctx.col2) = lv.col;
      ++found;
    }
  }
  if (found != 2)
    throw std::invalid_argument("doublet not found in the labeled spectrum");
  return ctx;
}

Eigen::MatrixXcd sw_effective_hamiltonian(const SWContext& ctx,
                                          const Vec3& r0) {
  ResolventSums rs = resolvent_sums(ctx, r0);
  const double eps_d = ctx.eps_d();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(4, 4);
  h.block<2, 2>(0, 0) =
      ((eps_d - 0.5 * ctx.delta0) * Eigen::Matrix2d::Identity() + rs.h0)
          .cast<std::complex<double>>();
  h.block<2, 2>(2, 2) =
      ((eps_d + 0.5 * ctx.delta0) * Eigen::Matrix2d::Identity() + rs.h1)
          .cast<std::complex<double>>();
  return h;
}

ExchangeBlock exchange_block(const SWContext& ctx, const Vec3& r0) {
  // independent assembly from the gamma sums with 1/4 and 1/2 prefactors
  const BlockSpectrum& bs = ctx.bs;
  const int M = ctx.doublet_M;
  Eigen::VectorXd w = ion_couplings(bs, r0, ctx.ion_moment);
  const double eps_d = ctx.eps_d();
  const double scale = std::max(bs.energy_scale(), std::abs(ctx.delta0));

  double d_minus_sum = 0.0, d_plus_sum = 0.0;
  double od_minus_sum = 0.0, od_plus_sum = 0.0;
  auto accumulate = [&](double g1, double g2, double denom, double sign) {
    if (std::abs(denom) < ctx.denom_threshold * scale)
      throw std::runtime_error("SW denominators singular");
    double d_term = 0.25 * (g1 * g1 - g2 * g2) / denom;
    double od_term = 0.5 * (g1 * g2) / denom;
    d_plus_sum += d_term;
    od_plus_sum += od_term;
    d_minus_sum += sign * d_term;
    od_minus_sum += sign * od_term;
  };
  if (M + 1 <= bs.n()) {  // gamma^(-): psi one excitation above
    Eigen::MatrixXd raise = weighted_raise(bs, M, w);
    for (int p = 0; p < int(bs.block_states[M + 1].size()); ++p) {
      double g1 =
          bs.vectors[M + 1].col(p).dot(raise * bs.vectors[M].col(ctx.col1));
      double g2 =
          bs.vectors[M + 1].col(p).dot(raise * bs.vectors[M].col(ctx.col2));
      accumulate(g1, g2, eps_d - bs.energies[M + 1][p] + ctx.delta0, +1.0);
    }
  }
  if (M - 1 >= 0) {  // gamma^(+): psi one excitation below
    Eigen::MatrixXd raise = weighted_raise(bs, M - 1, w);
    for (int p = 0; p < int(bs.block_states[M - 1].size()); ++p) {
      Eigen::VectorXd rp = raise * bs.vectors[M - 1].col(p);
      double g1 = bs.vectors[M].col(ctx.col1).dot(rp);
      double g2 = bs.vectors[M].col(ctx.col2).dot(rp);
      accumulate(g1, g2, eps_d - bs.energies[M - 1][p] - ctx.delta0, -1.0);
    }
  }
  ExchangeBlock out;
  out.r0 = r0;
  out.v_d_minus = d_minus_sum;
  out.v_od_minus = od_minus_sum;
  out.v_d_plus = d_plus_sum;
  out.v_od_plus = od_plus_sum;
  return out;
}

FitResult fit_xi(const SWContext& ctx, const Vec3& dir, double r_min,
                 double r_max, int n_samples) {
  Vec3 n = dir.normalized();
  std::vector<std::pair<double, double>> samples;
  double vmax = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    double r = r_min * std::pow(r_max / r_min, double(i) / (n_samples - 1));
    double v = exchange_block(ctx, r * n).v_delta();
    vmax = std::max(vmax, v);
    samples.push_back({r, v});
  }
  if (vmax < 1e-30)
    throw std::runtime_error("choose generic direction: V_delta vanishes");
  return fit_power_law(samples);
}

SWErrorReport verify_sw_vs_exact(const SWContext& ctx, const Vec3& r0) {
  const BlockSpectrum& bs = ctx.bs;
  const int n = bs.n();
  if (n + 1 > kMaxSites) throw std::invalid_argument("dimension cap exceeded");
  Eigen::VectorXd w = ion_couplings(bs, r0, ctx.ion_moment);

  // combined secular Hamiltonian, ion = bit n
  const int dim = 1 << (n + 1);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (int s = 0; s < dim; ++s) {
    int cl = s & ((1 << n) - 1);
    int mc = __builtin_popcount(unsigned(cl));
    h(s, s) = 0.5 * bs.spec.delta_cl * (2 * mc - n) +
              0.5 * ctx.delta0 * (((s >> n) & 1) ? 1.0 : -1.0);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j)
        if (((s >> i) & 1) != ((s >> j) & 1))
          h(s ^ (1 << i) ^ (1 << j), s) += bs.spec.coupling(i, j);
      if (((s >> i) & 1) != ((s >> n) & 1))
        h(s ^ (1 << i) ^ (1 << n), s) += w[i];
    }
  }

  ExchangeBlock ex = exchange_block(ctx, r0);
  SWErrorReport report;
  double rel = 0.0;
  for (int ion = 0; ion <= 1; ++ion) {
    // combined excitation block containing doublet (x) |ion>
    int m_tot = ctx.doublet_M + ion;
    std::vector<int> states;
    for (int s = 0; s < dim; ++s)
      if (__builtin_popcount(unsigned(s)) == m_tot) states.push_back(s);
    Eigen::MatrixXd hb(states.size(), states.size());
    for (size_t a = 0; a < states.size(); ++a)
      for (size_t b = 0; b < states.size(); ++b)
        hb(a, b) = h(states[a], states[b]);
    auto eig = eig_symmetric(hb);

    // projector onto doublet (x) |ion>
    Eigen::MatrixXd p(states.size(), 2);
    for (int k = 0; k < 2; ++k) {
      Eigen::VectorXd full = bs.embed(ctx.doublet_M, k == 0 ? ctx.col1 : ctx.col2);
      for (size_t a = 0; a < states.size(); ++a) {
        int s = states[a];
        p(a, k) = ((s >> n) & 1) == ion ? full[s & ((1 << n) - 1)] : 0.0;
      }
    }
    // two eigenstates with the largest doublet weight
    std::vector<std::pair<double, int>> weights;
    for (int c = 0; c < int(states.size()); ++c)
      weights.push_back({(p.transpose() * eig.vectors.col(c)).squaredNorm(), c});
    std::sort(weights.rbegin(), weights.rend());
    if (weights[1].first < 0.5)
      throw std::runtime_error("states not adiabatically connectable");
    double e1 = eig.values[weights[0].second];
    double e2 = eig.values[weights[1].second];
    double split_exact = std::abs(e1 - e2);

    Eigen::Matrix2d block = ex.v_st();
    block += ion == 0 ? Eigen::Matrix2d(-ex.v_dyn()) : ex.v_dyn();
    double split_sw =
        2.0 * std::sqrt(block(0, 0) * block(0, 0) + block(0, 1) * block(0, 1));
    if (ion == 0) {
      report.splitting_exact_lo = split_exact;
      report.splitting_sw_lo = split_sw;
    } else {
      report.splitting_exact_hi = split_exact;
      report.splitting_sw_hi = split_sw;
    }
    // both splittings at numerical zero: exact degeneracy, no error
    double floor = 1e-12 * bs.energy_scale();
    if (split_exact < floor && split_sw < floor) continue;
    rel = std::max(rel, std::abs(split_sw - split_exact) /
                            std::max(split_exact, floor));
  }
  report.rel_error = rel;
  return report;
}

ProtectionReport particle_hole_check(const ClusterSpec& spec, int col,
                                     double delta0, const Vec3& r0,
                                     double ion_moment) {
  if (spec.n() % 2 != 0)
    throw std::invalid_argument("particle-hole protection undefined");
  BlockSpectrum bs = block_spectrum(spec);
  const int M = spec.n() / 2;
  if (col < 0 || col >= int(bs.block_states[M].size()))
    throw std::invalid_argument("state index out of range");
  Eigen::VectorXd w = ion_couplings(bs, r0, ion_moment);
  const double e_alpha = bs.energies[M][col];

  // gamma^(+): <psi|Sigma^+|alpha>, psi in M+1; gamma^(-): psi in M-1
  Eigen::MatrixXd raise_up = weighted_raise(bs, M, w);
  Eigen::MatrixXd raise_dn = weighted_raise(bs, M - 1, w);
  Eigen::VectorXd gp =
      bs.vectors[M + 1].transpose() * (raise_up * bs.vectors[M].col(col));
  Eigen::VectorXd gm =
      (bs.vectors[M].col(col).transpose() * raise_dn * bs.vectors[M - 1])
          .transpose();

  auto shifts = [&](double d0) {
    double de_p = 0.0, de_m = 0.0;
    for (int p = 0; p < gp.size(); ++p)
      de_p += gp[p] * gp[p] / (e_alpha - bs.energies[M + 1][p] + d0);
    for (int p = 0; p < gm.size(); ++p)
      de_m += gm[p] * gm[p] / (e_alpha - bs.energies[M - 1][p] - d0);
    return std::make_pair(de_p, de_m);
  };

  ProtectionReport report;
  report.M = M;
  report.col = col;
  report.delta0 = delta0;
  auto [de_p, de_m] = shifts(delta0);
  report.de_plus = de_p;
  report.de_minus = de_m;
  report.difference = de_p - de_m;

  // linear response of the difference to x = delta_cl - delta0 around x = 0
  double h_step = 1e-3 * std::max(std::abs(spec.delta_cl), 1.0);
  std::vector<double> xs, ys;
  for (int j = -2; j <= 2; ++j) {
    double x = j * h_step;
    auto [p, m] = shifts(spec.delta_cl - x);
    xs.push_back(x);
    ys.push_back(p - m);
  }
  report.slope_numeric = fit_line(xs, ys).slope;

  double slope = 0.0;
  for (int p = 0; p < gp.size(); ++p) {
    double a = e_alpha - bs.energies[M + 1][p] + spec.delta_cl;
    slope += gp[p] * gp[p] / (a * a);
  }
  for (int p = 0; p < gm.size(); ++p) {
    double b = e_alpha - bs.energies[M - 1][p] - spec.delta_cl;
    slope += gm[p] * gm[p] / (b * b);
  }
  report.slope_analytic = slope;
  return report;
}

}  // namespace symcluster
