#pragma once

#include <cmath>

namespace jaclab {

/// Lebesgue measure of the unit ball in R^n.
inline double unit_ball_volume(int n) {
  return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

/// H^{n-1} measure of the unit sphere in R^n, i.e. n * omega_n.
inline double unit_sphere_area(int n) { return n * unit_ball_volume(n); }

}  // namespace jaclab
