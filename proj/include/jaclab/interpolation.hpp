#pragma once

// Monotone piecewise-cubic interpolation (Fritsch-Carlson limiter).
// Preserves monotonicity of the data on each segment, hence nonnegativity
// of nonnegative samples.

#include <cmath>
#include <cstddef>
#include <vector>

#include "jaclab/errors.hpp"

namespace jaclab {

class PchipInterpolant {
 public:
  PchipInterpolant() = default;

  PchipInterpolant(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() != y_.size() || x_.size() < 2)
      throw ConfigError("pchip: need at least two samples with matching sizes");
    for (std::size_t i = 0; i + 1 < x_.size(); ++i)
      if (!(x_[i] < x_[i + 1])) throw ConfigError("pchip: abscissae must be strictly increasing");

    const std::size_t n = x_.size();
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    d_.assign(n, 0.0);
    d_[0] = endpoint_slope(h[0], h.size() > 1 ? h[1] : h[0], delta[0],
                           delta.size() > 1 ? delta[1] : delta[0]);
    d_[n - 1] = endpoint_slope(h[n - 2], n > 2 ? h[n - 3] : h[n - 2], delta[n - 2],
                               n > 2 ? delta[n - 3] : delta[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) {
        d_[i] = 0.0;
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
  }

  double operator()(double x) const {
    const auto [i, t, h] = locate(x);
    const double y0 = y_[i], y1 = y_[i + 1], d0 = d_[i], d1 = d_[i + 1];
    const double t2 = t * t, t3 = t2 * t;
    return y0 * (2 * t3 - 3 * t2 + 1) + h * d0 * (t3 - 2 * t2 + t) + y1 * (-2 * t3 + 3 * t2) +
           h * d1 * (t3 - t2);
  }

  double derivative(double x) const {
    const auto [i, t, h] = locate(x);
    const double y0 = y_[i], y1 = y_[i + 1], d0 = d_[i], d1 = d_[i + 1];
    const double t2 = t * t;
    return (y0 * (6 * t2 - 6 * t) + h * d0 * (3 * t2 - 4 * t + 1) + y1 * (-6 * t2 + 6 * t) +
            h * d1 * (3 * t2 - 2 * t)) /
           h;
  }

  const std::vector<double>& knots() const { return x_; }
  const std::vector<double>& values() const { return y_; }

 private:
  static double endpoint_slope(double h0, double h1, double d0, double d1) {
    // Shape-preserving three-point estimate.
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(d) > 3.0 * std::abs(d0)) return 3.0 * d0;
    return d;
  }

  struct Loc {
    std::size_t i;
    double t, h;
  };
  Loc locate(double x) const {
    std::size_t lo = 0, hi = x_.size() - 1;
    if (x <= x_.front()) {
      hi = 1;
    } else if (x >= x_.back()) {
      lo = x_.size() - 2;
    } else {
      while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (x_[mid] <= x ? lo : hi) = mid;
      }
    }
    const double h = x_[lo + 1] - x_[lo];
    return {lo, (x - x_[lo]) / h, h};
  }

  std::vector<double> x_, y_, d_;
};

}  // namespace jaclab
