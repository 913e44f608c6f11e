#pragma once

#include <utility>
#include <vector>

namespace symcluster {

/// Ordinary least squares line y = intercept + slope * x.
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double rms = 0.0;  // root-mean-square residual
  double r2 = 0.0;   // coefficient of determination
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Power-law fit |value| = prefactor * r^(-exponent) in log-log space.
struct FitResult {
  double exponent = 0.0;
  double prefactor = 0.0;
  double residual = 0.0;  // RMS of the log fit
};

/// Requires at least 8 samples with positive values; throws
/// "power-law fit undefined" otherwise.
FitResult fit_power_law(const std::vector<std::pair<double, double>>& samples);

/// Stretched-exponential fit F(t) = exp(-(t/t2)^beta), via the slope of
/// ln(-ln F) against ln t. Fidelities must lie strictly inside (0, 1).
struct StretchFit {
  double beta = 0.0;
  double t2 = 0.0;
  double r2 = 0.0;
};

StretchFit fit_stretching(const std::vector<double>& times,
                          const std::vector<double>& fidelities);

}  // namespace symcluster
