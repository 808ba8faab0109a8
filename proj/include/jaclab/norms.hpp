#pragma once

// L^p norms, the L log L (Zygmund) norm
//   ||f|| = integral |f| log(e + |f| / ||f||_L1) dx
// computed in two passes, the metric dist_p (L^p for p > 1, L log L for
// p = 1), and a boundary-value/Jacobian ratio diagnostic.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "jaclab/errors.hpp"
#include "jaclab/geometry.hpp"
#include "jaclab/quadrature.hpp"
#include "jaclab/radial.hpp"

namespace jaclab {

struct NormReport {
  double value = 0.0;
  bool finite = true;
  std::string space;  // "Lp" or "LlogL"
  double p = 0.0;     // exponent when space == "Lp"
  double region_lo = 0.0, region_hi = 1.0;
  double l1_mass = 0.0;  // the ||f||_L1 used inside the log (LlogL only)
};

namespace detail {

template <class F>
double radial_integral(F&& g, int n, double a, double b, const QuadratureConfig& cfg,
                       const std::vector<double>& breaks, const std::vector<double>& singular,
                       bool* finite) {
  auto weighted = [&g, n](double r) { return g(r) * std::pow(r, n - 1); };
  *finite = true;
  try {
    return unit_sphere_area(n) * integrate_segmented(weighted, a, b, cfg, breaks, singular).value;
  } catch (const DivergentIntegral&) {
    *finite = false;
    return std::numeric_limits<double>::infinity();
  } catch (const ToleranceNotMet& err) {
    if (err.best_estimate >= 1e30) {
      *finite = false;
      return std::numeric_limits<double>::infinity();
    }
    throw;
  }
}

}  // namespace detail

/// ( n omega_n integral_a^b |f|^p r^{n-1} dr )^{1/p}.
inline NormReport lp_norm(const RadialDensity& f, double p, double a = 0.0, double b = 1.0,
                          const QuadratureConfig& cfg = {}) {
  if (p < 1.0) throw ConfigError("lp_norm: p must be >= 1");
  NormReport rep;
  rep.space = "Lp";
  rep.p = p;
  rep.region_lo = a;
  rep.region_hi = b;
  const double integral = detail::radial_integral(
      [&f, p](double r) { return std::pow(std::abs(f(r)), p); }, f.dim(), a, b, cfg,
      f.breakpoints(), f.singular_radii(), &rep.finite);
  rep.value = rep.finite ? std::pow(integral, 1.0 / p) : integral;
  return rep;
}

/// Two-pass L log L norm on [a,b]: first m = ||f||_L1(region), then
/// n omega_n integral |f| log(e + |f|/m) r^{n-1} dr. m = 0 gives 0.
inline NormReport llogl_norm(const RadialDensity& f, double a = 0.0, double b = 1.0,
                             const QuadratureConfig& cfg = {}) {
  NormReport rep;
  rep.space = "LlogL";
  rep.region_lo = a;
  rep.region_hi = b;
  const double m = detail::radial_integral([&f](double r) { return std::abs(f(r)); }, f.dim(), a, b,
                                           cfg, f.breakpoints(), f.singular_radii(), &rep.finite);
  if (!rep.finite) {
    rep.value = m;
    return rep;
  }
  rep.l1_mass = m;
  if (m == 0.0) {
    rep.value = 0.0;  // f vanishes a.e. on the region
    return rep;
  }
  rep.value = detail::radial_integral(
      [&f, m](double r) {
        const double v = std::abs(f(r));
        return v * std::log(M_E + v / m);
      },
      f.dim(), a, b, cfg, f.breakpoints(), f.singular_radii(), &rep.finite);
  return rep;
}

/// Metric on the data space: L^p distance for p > 1, L log L distance of
/// the difference for p = 1.
inline double dist(const RadialDensity& f, const RadialDensity& g, double p,
                   const QuadratureConfig& cfg = {}) {
  if (f.dim() != g.dim()) throw ConfigError("dist: densities must share the dimension");
  if (p < 1.0) throw ConfigError("dist: p must be >= 1");
  std::vector<double> breaks = f.breakpoints();
  breaks.insert(breaks.end(), g.breakpoints().begin(), g.breakpoints().end());
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  std::vector<double> singular = f.singular_radii();
  singular.insert(singular.end(), g.singular_radii().begin(), g.singular_radii().end());
  std::sort(singular.begin(), singular.end());
  singular.erase(std::unique(singular.begin(), singular.end()), singular.end());

  RadialDensity diff = RadialDensity::custom(
      f.dim(), [f, g](double r) { return std::abs(f(r) - g(r)); }, 0.0, breaks, singular);
  if (p > 1.0) return lp_norm(diff, p, 0.0, 1.0, cfg).value;
  return llogl_norm(diff, 0.0, 1.0, cfg).value;
}

struct LloglRatioReport {
  double ratio = 0.0;
  double llogl_jacobian = 0.0;  // ||Ju||_LlogL(B_1)
  double gradient_energy = 0.0; // bare n-energy integral of the stretching
};

/// Diagnostic ratio ||Ju||_LlogL / (1 + n-energy) for a stretching with
/// identity boundary values; the constant 1 stands for the fixed boundary
/// term. Reported, never asserted against a specific constant.
inline LloglRatioReport llogl_bound_ratio(const RadialProfile& p, const QuadratureConfig& cfg = {}) {
  if (std::abs(p.rho(1.0) - 1.0) > 1e-8)
    throw ConfigError("llogl_bound_ratio: profile must have identity boundary values");
  const int n = p.dim();
  RadialDensity ju = RadialDensity::custom(
      n, [p](double r) { return jacobian(p, r); }, 0.0, p.breakpoints(), {});
  LloglRatioReport rep;
  rep.llogl_jacobian = llogl_norm(ju, 0.0, 1.0, cfg).value;
  EnergyResult en = sobolev_energy(p, static_cast<double>(n), 0.0, 1.0, cfg);
  if (!en.finite) throw NumericError("llogl_bound_ratio: n-energy is infinite");
  rep.gradient_energy = en.value;
  rep.ratio = rep.llogl_jacobian / (1.0 + rep.gradient_energy);
  return rep;
}

}  // namespace jaclab
