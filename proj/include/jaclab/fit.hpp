#pragma once

// Ordinary least squares for y = slope * x + intercept, with standard
// errors, plus the log-log wrapper used for power-law exponent recovery.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "jaclab/errors.hpp"

namespace jaclab {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
  std::size_t points = 0;
};

inline LinearFit ols_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("ols_fit: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw ConfigError("ols_fit: need at least two points");

  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw ConfigError("ols_fit: degenerate abscissae");

  LinearFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += r * r;
  }
  const double dof = n > 2 ? static_cast<double>(n - 2) : 1.0;
  const double s2 = ss_res / dof;
  fit.slope_stderr = std::sqrt(s2 / sxx);
  fit.intercept_stderr = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  return fit;
}

/// OLS on (log x, log y); all inputs must be positive.
inline LinearFit loglog_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("loglog_fit: size mismatch");
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ConfigError("loglog_fit: values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return ols_fit(lx, ly);
}

}  // namespace jaclab
