#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "symcluster/cluster.hpp"
#include "symcluster/ring_exchange.hpp"
#include "symcluster/symmetry.hpp"

using namespace symcluster;

namespace {

ClusterSpec quartet(double delta, double tilt) {
  ClusterSpec spec;
  spec.sites = {{1, 0, tilt}, {0, 1, -tilt}, {-1, 0, tilt}, {0, -1, -tilt}};
  spec.delta_cl = delta;
  spec.coupling_overrides[{0, 1}] = 0.7;
  spec.coupling_overrides[{1, 2}] = 0.7;
  spec.coupling_overrides[{2, 3}] = 0.7;
  spec.coupling_overrides[{0, 3}] = 0.7;
  spec.coupling_overrides[{0, 2}] = 0.31;
  spec.coupling_overrides[{1, 3}] = 0.31;
  return spec;
}

SWContext s4_context(double delta0, double ion_moment = 1.0) {
  ClusterSpec spec = quartet(10.0, 0.25);
  PointGroup g = standard_group("S4", spec);
  BlockSpectrum bs = label_levels(spec, g, block_spectrum(spec));
  return make_sw_context(bs, 1, "E", 0, delta0, ion_moment);
}

const Vec3 kGenericDir = Vec3{0.3, 0.7, 0.55}.normalized();

}  // namespace

TEST_CASE("SW effective Hamiltonian structure") {
  SWContext ctx = s4_context(7.0);
  Vec3 r0 = kGenericDir * 8.0;
  Eigen::MatrixXcd h = sw_effective_hamiltonian(ctx, r0);

  CHECK((h - h.adjoint()).norm() < 1e-12 * h.norm());
  CHECK(h.imag().norm() < 1e-12 * h.norm());  // no sigma^y in the real gauge
  // ion-block diagonal
  CHECK(h.block<2, 2>(0, 2).norm() == 0.0);
  CHECK(h.block<2, 2>(2, 0).norm() == 0.0);

  // second order: halving the coupling quarters the shift
  SWContext half = s4_context(7.0, 0.5);
  Eigen::MatrixXcd h2 = sw_effective_hamiltonian(half, r0);
  Eigen::MatrixXcd zeroth = Eigen::MatrixXcd::Zero(4, 4);
  double eps_d = ctx.eps_d();
  zeroth.diagonal() << eps_d - 3.5, eps_d - 3.5, eps_d + 3.5, eps_d + 3.5;
  // absolute tolerance: the shifts are ~1e-7 on top of eps_d ~ 10, so the
  // subtraction itself carries ~1e-15 of roundoff
  CHECK(((h2 - zeroth) * 4.0 - (h - zeroth)).norm() < 1e-12);
}

TEST_CASE("SW matches brute-force second-order perturbation theory") {
  // magic-angle pair: intra-cluster coupling vanishes exactly, so the two
  // M=1 states are a degenerate pseudo-doublet
  ClusterSpec pair;
  Vec3 axis = Vec3{std::sqrt(2.0), 0.0, 1.0}.normalized();
  pair.sites = {0.5 * axis, -0.5 * axis};
  pair.delta_cl = 9.0;
  BlockSpectrum bs = block_spectrum(pair);
  REQUIRE(std::abs(bs.energies[1][0] - bs.energies[1][1]) < 1e-14);
  SWContext ctx;
  ctx.bs = bs;
  ctx.doublet_M = 1;
  ctx.col1 = 0;
  ctx.col2 = 1;
  ctx.delta0 = 6.0;

  Vec3 r0 = kGenericDir * 6.0;
  Vec3 r_abs = pair.barycenter() + r0;
  Eigen::Vector2d w;
  for (int i = 0; i < 2; ++i)
    w[i] = dipole_kernel(r_abs - pair.sites[i]) * pair.m_z;

  // combined space, ion = bit 2: V = sum_i w_i (s+_i s-_ion + h.c.)
  Eigen::MatrixXd hcl = build_secular_hamiltonian(pair);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(8, 8);
  for (int s = 0; s < 8; ++s)
    for (int i = 0; i < 2; ++i)
      if (((s >> i) & 1) != ((s >> 2) & 1)) v(s ^ (1 << i) ^ 4, s) += w[i];

  // unperturbed eigenbasis: products of cluster eigenstates and ion states
  struct Basis {
    Eigen::VectorXd vec;
    double energy;
    bool in_p;
  };
  std::vector<Basis> basis;
  std::vector<int> p_order;  // index of |k, ion> in `basis`
  p_order.resize(4, -1);
  for (int ion = 0; ion <= 1; ++ion)
    for (int M = 0; M <= 2; ++M)
      for (int c = 0; c < int(bs.block_states[M].size()); ++c) {
        Eigen::VectorXd emb = bs.embed(M, c);
        Eigen::VectorXd full = Eigen::VectorXd::Zero(8);
        for (int s = 0; s < 8; ++s)
          if (((s >> 2) & 1) == ion) full[s] = emb[s & 3];
        bool in_p = M == 1;
        if (in_p) p_order[2 * ion + c] = int(basis.size());
        basis.push_back({full, bs.energies[M][c] + (ion ? 3.0 : -3.0), in_p});
      }

  // oracle: textbook second order with symmetrized denominators
  Eigen::MatrixXd oracle(4, 4);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const Basis& ba = basis[p_order[a]];
      const Basis& bb = basis[p_order[b]];
      double acc = a == b ? ba.energy : 0.0;
      for (const Basis& psi : basis) {
        if (psi.in_p) continue;
        double va = ba.vec.dot(v * psi.vec);
        double vb = psi.vec.dot(v * bb.vec);
        acc += 0.5 * va * vb *
               (1.0 / (ba.energy - psi.energy) + 1.0 / (bb.energy - psi.energy));
      }
      oracle(a, b) = acc;
    }

  Eigen::MatrixXcd got = sw_effective_hamiltonian(ctx, r0);
  CHECK((oracle.cast<std::complex<double>>() - got).norm() <
        1e-10 * oracle.norm());
}

TEST_CASE("exchange block reproduces the SW decomposition") {
  SWContext ctx = s4_context(7.0);
  for (double r : {5.0, 9.0, 20.0}) {
    Vec3 r0 = kGenericDir * r;
    Eigen::MatrixXcd h = sw_effective_hamiltonian(ctx, r0);
    ExchangeBlock ex = exchange_block(ctx, r0);

    Eigen::Matrix2d b0 = h.block<2, 2>(0, 0).real();
    Eigen::Matrix2d b1 = h.block<2, 2>(2, 2).real();
    double d0 = 0.5 * (b0(0, 0) - b0(1, 1)), od0 = b0(0, 1);
    double d1 = 0.5 * (b1(0, 0) - b1(1, 1)), od1 = b1(0, 1);
    double scale = std::max(h.norm(), 1e-300);
    CHECK(std::abs(ex.v_d_minus - 0.5 * (d1 - d0)) < 1e-12 * scale);
    CHECK(std::abs(ex.v_d_plus - 0.5 * (d1 + d0)) < 1e-12 * scale);
    CHECK(std::abs(ex.v_od_minus - 0.5 * (od1 - od0)) < 1e-12 * scale);
    CHECK(std::abs(ex.v_od_plus - 0.5 * (od1 + od0)) < 1e-12 * scale);
  }
}

TEST_CASE("symmetry axis forbids doublet mixing") {
  SWContext ctx = s4_context(7.0);
  ExchangeBlock ex = exchange_block(ctx, {0, 0, 12.0});
  double scale = std::abs(ex.v_d_minus) + std::abs(ex.v_d_plus) + 1e-300;
  CHECK(std::abs(ex.v_od_minus) < 1e-12 * scale);
}

TEST_CASE("far-field decay is at least r^-6") {
  SWContext ctx = s4_context(7.0);
  ExchangeBlock near = exchange_block(ctx, kGenericDir * 50.0);
  ExchangeBlock far = exchange_block(ctx, kGenericDir * 100.0);
  CHECK(far.v_delta() < near.v_delta() / 50.0);
  CHECK(std::abs(far.v_d_plus) < std::abs(near.v_d_plus) / 50.0);
}

TEST_CASE("gauge covariance of the doublet couplings") {
  SWContext ctx = s4_context(7.0);
  Vec3 r0 = kGenericDir * 9.0;
  ExchangeBlock a = exchange_block(ctx, r0);

  // rotate the doublet basis
  double phi = 0.7341;
  SWContext rot = ctx;
  Eigen::VectorXd c1 = ctx.bs.vectors[1].col(ctx.col1);
  Eigen::VectorXd c2 = ctx.bs.vectors[1].col(ctx.col2);
  rot.bs.vectors[1].col(ctx.col1) = std::cos(phi) * c1 + std::sin(phi) * c2;
  rot.bs.vectors[1].col(ctx.col2) = -std::sin(phi) * c1 + std::cos(phi) * c2;
  ExchangeBlock b = exchange_block(rot, r0);

  CHECK(b.v_delta() == doctest::Approx(a.v_delta()).epsilon(1e-12));
  CHECK(std::hypot(b.v_d_plus, b.v_od_plus) ==
        doctest::Approx(std::hypot(a.v_d_plus, a.v_od_plus)).epsilon(1e-12));
  // (V_d, V_od) rotates by 2 phi
  double got = std::atan2(b.v_od_minus, b.v_d_minus);
  double expect = std::atan2(a.v_od_minus, a.v_d_minus) - 2.0 * phi;
  double diff = std::remainder(got - expect, 2.0 * M_PI);
  CHECK(std::abs(diff) < 1e-9);
}

TEST_CASE("ring-exchange exponents") {
  // fit windows sit well into the far field: the leading power emerges
  // only once subleading terms (one power down, larger prefactor) die off
  // S4 quartet: delta = 6 + xi = 7
  SWContext s4 = s4_context(7.0);
  FitResult fit = fit_xi(s4, kGenericDir, 100.0, 1000.0, 14);
  CHECK(fit.exponent == doctest::Approx(7.0).epsilon(0.05));

  // C4 quartet (flat): delta = 8
  ClusterSpec flat = quartet(10.0, 0.0);
  PointGroup c4 = standard_group("C4", flat);
  BlockSpectrum bc = label_levels(flat, c4, block_spectrum(flat));
  SWContext ctx4 = make_sw_context(bc, 1, "E", 0, 7.0);
  fit = fit_xi(ctx4, kGenericDir, 100.0, 1000.0, 14);
  CHECK(fit.exponent == doctest::Approx(8.0).epsilon(0.05));

  // unprotected pseudo-doublet of an asymmetric pair: delta = 6
  ClusterSpec pair;
  pair.sites = {{0.5, 0.1, 0.0}, {-0.5, -0.1, 0.3}};
  pair.delta_cl = 10.0;
  BlockSpectrum bp = block_spectrum(pair);
  SWContext ctxp;
  ctxp.bs = bp;
  ctxp.doublet_M = 1;
  ctxp.col1 = 0;
  ctxp.col2 = 1;
  ctxp.delta0 = 7.0;
  fit = fit_xi(ctxp, kGenericDir, 300.0, 3000.0, 14);
  CHECK(fit.exponent == doctest::Approx(6.0).epsilon(0.05));

  // scaling collapse: r^7 V_delta converges along the ray
  double v500 = exchange_block(s4, kGenericDir * 500.0).v_delta();
  double v1000 = exchange_block(s4, kGenericDir * 1000.0).v_delta();
  CHECK(std::pow(500.0, 7) * v500 ==
        doctest::Approx(std::pow(1000.0, 7) * v1000).epsilon(0.03));
}

TEST_CASE("SW against exact diagonalization") {
  // zero coupling: exact degeneracy, zero error
  SWContext off = s4_context(7.0, 0.0);
  SWErrorReport zero = verify_sw_vs_exact(off, kGenericDir * 6.0);
  CHECK(zero.rel_error == 0.0);

  // moderate coupling: O(coupling/detuning) relative error
  SWContext ctx = s4_context(7.0);
  Vec3 r0 = kGenericDir * 6.5;
  SWErrorReport rep = verify_sw_vs_exact(ctx, r0);
  CHECK(rep.splitting_exact_lo > 0.0);
  CHECK(rep.rel_error < 0.10);

  // halving the coupling roughly halves the relative error
  SWContext half = s4_context(7.0, 0.5);
  SWErrorReport rep2 = verify_sw_vs_exact(half, r0);
  CHECK(rep2.rel_error / rep.rel_error <= 0.6);
}

TEST_CASE("particle-hole protection at matched gaps") {
  ClusterSpec spec = quartet(10.0, 0.25);
  Vec3 r0 = kGenericDir * 5.0;

  // M=2 singlet, Delta0 = Delta_cl: shifts identical
  ProtectionReport rep = particle_hole_check(spec, 0, 10.0, r0);
  CHECK(rep.M == 2);
  CHECK(std::abs(rep.difference) <= 1e-10 * std::abs(rep.de_plus));

  // detuned: difference linear, slope matches the resolvent expectation
  CHECK(rep.slope_numeric ==
        doctest::Approx(rep.slope_analytic).epsilon(0.01));
  std::vector<double> xs, ys;
  for (int j = -5; j <= 5; ++j) {
    double x = 1e-2 * 10.0 * j / 5.0;
    ProtectionReport r = particle_hole_check(spec, 0, 10.0 - x, r0);
    xs.push_back(x);
    ys.push_back(r.difference);
  }
  LinearFit line = fit_line(xs, ys);
  CHECK(line.r2 > 0.999);

  CHECK_THROWS(particle_hole_check(ClusterSpec{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}},
                                               10.0},
                                   0, 10.0, r0));
}

TEST_CASE("dynamical coupling dies at matched gaps, static survives") {
  ClusterSpec spec = quartet(10.0, 0.25);
  PointGroup g = standard_group("S4", spec);
  BlockSpectrum bs = label_levels(spec, g, block_spectrum(spec));
  // the M=2 zero-energy doublet
  SWContext ctx = make_sw_context(bs, 2, "E", 0, 10.0);
  ExchangeBlock ex = exchange_block(ctx, kGenericDir * 5.0);
  double st = ex.v_st().norm();
  CHECK(st > 0.0);
  CHECK(ex.v_dyn().norm() < 1e-10 * st);
}
