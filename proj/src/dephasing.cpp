#include "symcluster/dephasing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "symcluster/seeding.hpp"

namespace symcluster {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

void check_sequence(const PulseSequence& seq) {
  if (!(seq.tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (seq.n_intervals < 1)
    throw std::invalid_argument("n_intervals must be at least 1");
}

/// exp(-i (hd sigma_z + hod sigma_x) dt) for real hd, hod.
Eigen::Matrix2cd segment_unitary(double hd, double hod, double dt) {
  const double w = std::hypot(hd, hod);
  const double c = std::cos(w * dt);
  const double s = w > 0.0 ? std::sin(w * dt) / w : dt;
  Eigen::Matrix2cd u;
  u << c - kI * (s * hd), -kI * (s * hod), -kI * (s * hod), c + kI * (s * hd);
  return u;
}

bool all_commuting(const std::vector<Fluctuator>& fluctuators) {
  return std::all_of(fluctuators.begin(), fluctuators.end(),
                     [](const Fluctuator& f) { return f.coupling.commuting(); });
}

void check_agreement(const std::vector<Fluctuator>& fluctuators,
                     const std::vector<TelegraphHistory>& histories) {
  if (fluctuators.size() != histories.size())
    throw std::invalid_argument("one history per fluctuator required");
}

}  // namespace

// ---------------------------------------------------------------------------
// Pulse sequences
// ---------------------------------------------------------------------------

std::vector<double> PulseSequence::pulse_times() const {
  check_sequence(*this);
  if (kind == SequenceKind::FreeEvolution) return {};
  std::vector<double> times(n_intervals);
  for (int k = 0; k < n_intervals; ++k) times[k] = (2 * k + 1) * tau;
  return times;
}

double PulseSequence::f(double t) const {
  check_sequence(*this);
  if (kind == SequenceKind::FreeEvolution) return 1.0;
  // pulses sit at odd multiples of tau
  const long n = static_cast<long>(std::floor((t / tau + 1.0) * 0.5));
  return n % 2 == 0 ? 1.0 : -1.0;
}

double PulseSequence::filter_integral(double t) const {
  check_sequence(*this);
  if (kind == SequenceKind::FreeEvolution) return t;
  const double period = 4.0 * tau;
  double u = std::fmod(t, period);
  if (u < 0.0) u += period;
  if (u <= tau) return u;
  if (u <= 3.0 * tau) return 2.0 * tau - u;
  return u - period;
}

PulseSequence free_evolution(double total_time) {
  if (!(total_time > 0.0))
    throw std::invalid_argument("total_time must be positive");
  return {SequenceKind::FreeEvolution, total_time / 2.0, 1};
}

PulseSequence hahn(double tau) { return {SequenceKind::Hahn, tau, 1}; }

PulseSequence cpmg(double tau, int n_intervals) {
  return {SequenceKind::Cpmg, tau, n_intervals};
}

// ---------------------------------------------------------------------------
// Telegraph fluctuators
// ---------------------------------------------------------------------------

int TelegraphHistory::state_at(double t) const {
  const auto it =
      std::upper_bound(flip_times.begin(), flip_times.end(), t);
  const auto flips = static_cast<std::size_t>(it - flip_times.begin());
  return flips % 2 == 0 ? s0 : -s0;
}

TelegraphHistory sample_history(double kappa_s, double horizon,
                                std::mt19937_64& rng) {
  if (kappa_s < 0.0)
    throw std::invalid_argument("flip rate must be non-negative");
  if (!(horizon > 0.0))
    throw std::invalid_argument("horizon must be positive");
  TelegraphHistory h;
  h.s0 = std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? 1 : -1;
  if (kappa_s > 0.0) {
    std::exponential_distribution<double> gap(kappa_s);
    for (double t = gap(rng); t < horizon; t += gap(rng))
      h.flip_times.push_back(t);
  }
  return h;
}

double dynamic_weight(const TelegraphHistory& history,
                      const PulseSequence& seq, double total_time) {
  double w = 0.0;
  double f_prev = 0.0;  // F(0) = 0
  double sign = history.s0;
  for (const double tf : history.flip_times) {
    if (tf >= total_time) break;
    const double f_here = seq.filter_integral(tf);
    w += sign * (f_here - f_prev);
    f_prev = f_here;
    sign = -sign;
  }
  w += sign * (seq.filter_integral(total_time) - f_prev);
  return w;
}

std::complex<double> evolve_exact(
    const Eigen::Vector2cd& psi0, const std::vector<Fluctuator>& fluctuators,
    const std::vector<TelegraphHistory>& histories, const PulseSequence& seq) {
  check_agreement(fluctuators, histories);
  const double total_time = seq.total_time();

  if (all_commuting(fluctuators)) {
    // All couplings are sigma_z: accumulate a single scalar phase.
    double phase = 0.0;
    const double f_end = seq.filter_integral(total_time);
    for (std::size_t j = 0; j < fluctuators.size(); ++j) {
      const TelegraphCoupling& c = fluctuators[j].coupling;
      phase += c.v_d_dyn * dynamic_weight(histories[j], seq, total_time) +
               c.v_d_st * f_end;
    }
    return std::norm(psi0(0)) * std::exp(-kI * phase) +
           std::norm(psi0(1)) * std::exp(kI * phase);
  }

  // Merge flip and pulse events into one ordered pass.
  struct Event {
    double time;
    int index;  // fluctuator index, or -1 for a pi pulse
  };
  std::vector<Event> events;
  for (std::size_t j = 0; j < fluctuators.size(); ++j)
    for (const double tf : histories[j].flip_times)
      if (tf < total_time) events.push_back({tf, static_cast<int>(j)});
  for (const double tp : seq.pulse_times())
    if (tp < total_time) events.push_back({tp, -1});
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
  events.push_back({total_time, -2});

  std::vector<double> sign(fluctuators.size());
  for (std::size_t j = 0; j < fluctuators.size(); ++j)
    sign[j] = histories[j].s0;

  auto field = [&](double f_sign) {
    double hd = 0.0, hod = 0.0;
    for (std::size_t j = 0; j < fluctuators.size(); ++j) {
      const TelegraphCoupling& c = fluctuators[j].coupling;
      hd += sign[j] * c.v_d_dyn + c.v_d_st;
      hod += sign[j] * c.v_od_dyn + c.v_od_st;
    }
    return std::pair<double, double>{f_sign * hd, f_sign * hod};
  };

  Eigen::Vector2cd psi = psi0;
  double t_prev = 0.0;
  double f_sign = 1.0;
  for (const Event& ev : events) {
    if (ev.time > t_prev) {
      const auto [hd, hod] = field(f_sign);
      psi = segment_unitary(hd, hod, ev.time - t_prev) * psi;
      t_prev = ev.time;
    }
    if (ev.index >= 0)
      sign[ev.index] = -sign[ev.index];
    else if (ev.index == -1)
      f_sign = -f_sign;
  }
  return psi0.dot(psi);
}

std::complex<double> evolve_commuting(
    const Eigen::Vector2cd& psi0, const std::vector<Fluctuator>& fluctuators,
    const std::vector<TelegraphHistory>& histories, const PulseSequence& seq) {
  check_agreement(fluctuators, histories);
  const double total_time = seq.total_time();
  const double f_end = seq.filter_integral(total_time);
  Eigen::Vector2cd psi = psi0;
  for (std::size_t j = 0; j < fluctuators.size(); ++j) {
    const TelegraphCoupling& c = fluctuators[j].coupling;
    const double w = dynamic_weight(histories[j], seq, total_time);
    const double xd = c.v_d_dyn * w + c.v_d_st * f_end;
    const double xod = c.v_od_dyn * w + c.v_od_st * f_end;
    psi = segment_unitary(xd, xod, 1.0) * psi;
  }
  return psi0.dot(psi);
}

// ---------------------------------------------------------------------------
// Disorder ensembles
// ---------------------------------------------------------------------------

EnsembleSpec synthetic_ensemble(double density, double r_min, double r_max,
                                double kappa_s, double v0, double delta,
                                double od_fraction) {
  EnsembleSpec e;
  e.density = density;
  e.r_min = r_min;
  e.r_max = r_max;
  e.kappa_s = kappa_s;
  e.coupling = [v0, delta, od_fraction](const Vec3& u) {
    const double r = u.norm();
    const double cz = u.z() / r;
    const double g = 1.0 - 3.0 * cz * cz;
    TelegraphCoupling c;
    c.v_d_dyn = v0 * g / std::pow(r, delta);
    c.v_od_dyn = od_fraction * c.v_d_dyn;
    return c;
  };
  return e;
}

EnsembleSpec physical_ensemble(const SWContext& ctx, double density,
                               double r_min, double r_max, double kappa_s) {
  EnsembleSpec e;
  e.density = density;
  e.r_min = r_min;
  e.r_max = r_max;
  e.kappa_s = kappa_s;
  e.coupling = [ctx](const Vec3& u) {
    const ExchangeBlock ex = exchange_block(ctx, u);
    TelegraphCoupling c;
    // ion state n = 0 <-> s = +1: block is v_st - s v_dyn
    c.v_d_dyn = -ex.v_d_minus;
    c.v_od_dyn = -ex.v_od_minus;
    c.v_d_st = ex.v_d_plus;
    c.v_od_st = ex.v_od_plus;
    return c;
  };
  return e;
}

FidelityCurve ensemble_fidelity(const EnsembleSpec& ensemble,
                                SequenceKind kind, int n_intervals,
                                const std::vector<double>& times,
                                int realizations, std::uint64_t seed,
                                int workers) {
  if (ensemble.density < 0.0)
    throw std::invalid_argument("density must be non-negative");
  if (!(ensemble.r_min > 0.0) || !(ensemble.r_max > ensemble.r_min))
    throw std::invalid_argument("require 0 < r_min < r_max");
  if (ensemble.kappa_s < 0.0)
    throw std::invalid_argument("flip rate must be non-negative");
  if (ensemble.density > 0.0 && !ensemble.coupling)
    throw std::invalid_argument("ensemble coupling rule missing");
  if (times.empty() || !std::is_sorted(times.begin(), times.end()) ||
      !(times.front() > 0.0))
    throw std::invalid_argument("times must be positive and ascending");
  if (realizations < 1)
    throw std::invalid_argument("realizations must be positive");
  if (n_intervals < 1)
    throw std::invalid_argument("n_intervals must be at least 1");
  if (workers < 1) workers = 1;

  const double horizon = times.back();
  const double shell = ensemble.r_max * ensemble.r_max * ensemble.r_max -
                       ensemble.r_min * ensemble.r_min * ensemble.r_min;
  const double mean_count =
      ensemble.density * 4.0 / 3.0 * M_PI * shell;
  const std::size_t nt = times.size();
  const Eigen::Vector2cd psi0 =
      (Eigen::Vector2cd() << 1.0, 1.0).finished() / std::sqrt(2.0);

  std::vector<std::complex<double>> amp(
      static_cast<std::size_t>(realizations) * nt);

  auto run_range = [&](int r_begin, int r_end) {
    std::vector<Fluctuator> fluctuators;
    std::vector<TelegraphHistory> histories;
    for (int r = r_begin; r < r_end; ++r) {
      std::mt19937_64 rng(derive_stream(seed, "dephasing.realization",
                                        static_cast<std::uint64_t>(r)));
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      const int n = mean_count > 0.0
                        ? std::poisson_distribution<int>(mean_count)(rng)
                        : 0;
      fluctuators.clear();
      histories.clear();
      fluctuators.reserve(n);
      histories.reserve(n);
      for (int j = 0; j < n; ++j) {
        const double r3 = ensemble.r_min * ensemble.r_min * ensemble.r_min +
                          unif(rng) * shell;
        const double radius = std::cbrt(r3);
        const double cz = 2.0 * unif(rng) - 1.0;
        const double phi = 2.0 * M_PI * unif(rng);
        const double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
        Fluctuator f;
        f.position =
            radius * Vec3(sz * std::cos(phi), sz * std::sin(phi), cz);
        f.kappa_s = ensemble.kappa_s;
        f.coupling = ensemble.coupling(f.position);
        fluctuators.push_back(f);
        histories.push_back(sample_history(ensemble.kappa_s, horizon, rng));
      }
      for (std::size_t i = 0; i < nt; ++i) {
        PulseSequence seq;
        seq.kind = kind;
        seq.n_intervals = kind == SequenceKind::Hahn ? 1 : n_intervals;
        seq.tau = times[i] / (2.0 * seq.n_intervals);
        amp[static_cast<std::size_t>(r) * nt + i] =
            evolve_exact(psi0, fluctuators, histories, seq);
      }
    }
  };

  if (workers == 1 || realizations < 2 * workers) {
    run_range(0, realizations);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (realizations + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int lo = w * chunk;
      const int hi = std::min(realizations, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  FidelityCurve curve;
  curve.times = times;
  curve.mean_amplitude.resize(nt);
  curve.fidelity.resize(nt);
  curve.std_error.resize(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    std::complex<double> mean = 0.0;
    for (int r = 0; r < realizations; ++r)
      mean += amp[static_cast<std::size_t>(r) * nt + i];
    mean /= static_cast<double>(realizations);
    double var = 0.0;
    for (int r = 0; r < realizations; ++r)
      var += std::norm(amp[static_cast<std::size_t>(r) * nt + i] - mean);
    var /= std::max(1.0, static_cast<double>(realizations - 1));
    const double amp_err = std::sqrt(var / realizations);
    curve.mean_amplitude[i] = mean;
    curve.fidelity[i] = std::norm(mean);
    curve.std_error[i] = 2.0 * std::abs(mean) * amp_err;
  }

  if (ensemble.density > 0.0 && ensemble.coupling) {
    const TelegraphCoupling edge =
        ensemble.coupling(Vec3(ensemble.r_min, 0.0, 0.0));
    const double v_edge =
        std::hypot(std::hypot(edge.v_d_dyn, edge.v_od_dyn),
                   std::hypot(edge.v_d_st, edge.v_od_st));
    if (v_edge * horizon > 10.0)
      curve.warnings.push_back(
          "strong coupling: inner-shell coupling times horizon exceeds 10");
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Analytic decay function and timescale summary
// ---------------------------------------------------------------------------

AnalyticG analytic_g(double delta, double kappa_s, double t, int n_p,
                     const std::string& regime) {
  if (!(delta > 3.0))
    throw std::invalid_argument("power-law exponent must exceed 3");
  if (!(kappa_s > 0.0) || !(t > 0.0))
    throw std::invalid_argument("kappa_s and t must be positive");
  if (n_p < 1) throw std::invalid_argument("n_p must be at least 1");

  const double tau = t / (2.0 * n_p);
  const double g_short =
      kappa_s * t * (delta / (delta + 3.0)) * std::pow(2.0 * tau, 3.0 / delta);
  const double g_inter =
      std::pow(t * t * t * kappa_s / (static_cast<double>(n_p) * n_p),
               3.0 / (2.0 * delta));
  const double g_long = std::pow(t / kappa_s, 3.0 / (2.0 * delta));

  AnalyticG out;
  if (regime == "short") {
    out.value = g_short;
    out.regime = "short";
    return out;
  }
  if (regime == "intermediate") {
    out.value = g_inter;
    out.regime = "intermediate";
    return out;
  }
  if (regime == "long") {
    out.value = g_long;
    out.regime = "long";
    return out;
  }
  if (regime != "auto") throw std::invalid_argument("unknown regime");

  const double x = kappa_s * t;
  const bool has_intermediate = n_p > 1;
  if (x < 1.0 / 3.0) {
    out.value = g_short;
    out.regime = "short";
  } else if (has_intermediate && x > 3.0 && x < n_p / 3.0) {
    out.value = g_inter;
    out.regime = "intermediate";
  } else if (x > 3.0 * n_p) {
    out.value = g_long;
    out.regime = "long";
  } else if (x <= 3.0) {
    const double next = has_intermediate ? g_inter : g_long;
    out.ambiguous = true;
    out.value_low = std::min(g_short, next);
    out.value_high = std::max(g_short, next);
    out.value = std::sqrt(out.value_low * out.value_high);
    out.regime = has_intermediate ? "crossover(short-intermediate)"
                                  : "crossover(short-long)";
  } else {
    out.ambiguous = true;
    out.value_low = std::min(g_inter, g_long);
    out.value_high = std::max(g_inter, g_long);
    out.value = std::sqrt(out.value_low * out.value_high);
    out.regime = has_intermediate ? "crossover(intermediate-long)"
                                  : "crossover(short-long)";
  }
  return out;
}

T2Summary t2_summary(double v_typ, double kappa_s, int n_p) {
  if (!(v_typ > 0.0) || !(kappa_s > 0.0))
    throw std::invalid_argument("v_typ and kappa_s must be positive");
  if (n_p < 1) throw std::invalid_argument("n_p must be at least 1");
  T2Summary s;
  s.v_typ = v_typ;
  s.kappa_s = kappa_s;
  s.n_p = n_p;
  s.t_mn = kappa_s / (v_typ * v_typ);
  s.t_np = std::cbrt(static_cast<double>(n_p) * n_p /
                     (v_typ * v_typ * kappa_s));
  if (kappa_s / v_typ <= std::sqrt(static_cast<double>(n_p))) {
    s.t2 = s.t_np;
    s.branch = "pulse-limited";
  } else {
    s.t2 = s.t_mn;
    s.branch = "motional-narrowing";
  }
  return s;
}

}  // namespace symcluster
