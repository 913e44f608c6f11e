#include "symcluster/fitting.hpp"

#include <cmath>
#include <stdexcept>

namespace symcluster {

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = int(x.size());
  if (n < 2 || y.size() != x.size())
    throw std::invalid_argument("fit_line: need at least two points");
  double sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissa");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (int i = 0; i < n; ++i) {
    double r = y[i] - fit.intercept - fit.slope * x[i];
    ss_res += r * r;
  }
  fit.rms = std::sqrt(ss_res / n);
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

FitResult fit_power_law(
    const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 8)
    throw std::invalid_argument("power-law fit undefined: need >= 8 samples");
  std::vector<double> lx, ly;
  for (const auto& [r, v] : samples) {
    if (!(r > 0.0) || !(std::abs(v) > 0.0))
      throw std::invalid_argument("power-law fit undefined");
    lx.push_back(std::log(r));
    ly.push_back(std::log(std::abs(v)));
  }
  LinearFit line = fit_line(lx, ly);
  FitResult out;
  out.exponent = -line.slope;
  out.prefactor = std::exp(line.intercept);
  out.residual = line.rms;
  return out;
}

StretchFit fit_stretching(const std::vector<double>& times,
                          const std::vector<double>& fidelities) {
  std::vector<double> lx, ly;
  for (size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0)) continue;
    if (!(fidelities[i] > 0.0) || !(fidelities[i] < 1.0)) continue;
    lx.push_back(std::log(times[i]));
    ly.push_back(std::log(-std::log(fidelities[i])));
  }
  if (lx.size() < 2)
    throw std::invalid_argument("fit_stretching: too few usable points");
  LinearFit line = fit_line(lx, ly);
  StretchFit out;
  out.beta = line.slope;
  out.t2 = std::exp(-line.intercept / line.slope);
  out.r2 = line.r2;
  return out;
}

}  // namespace symcluster
