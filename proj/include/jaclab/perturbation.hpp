#pragma once

// The boundary-layer perturbation family f_{gamma,R}.
//
// Given a base density f with a positive lower bound, the perturbation
// rescales f inside B_R and grafts an explicit radial profile onto the
// annulus A(R,1):
//
//   f_{gamma,R}(r) = gamma^n f(r) / avg_{B_R} f          for r < R,
//                  = M (gamma R + M (r-R))^{n-1} / r^{n-1} for R <= r < 1,
//
// with M = (1 - gamma R)/(1 - R) and gamma coupled to R through
//   1 - gamma R = (1 - R)^{1 + alpha/q},   alpha in (-q/p, -1).
//
// The coupling makes the annulus solution's radial q-energy blow up at the
// rate (1-R)^{1+alpha} while the L^p distance to f vanishes; the exact
// annulus solution is the linear profile rho(r) = gamma R + M (r - R).

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "jaclab/errors.hpp"
#include "jaclab/geometry.hpp"
#include "jaclab/norms.hpp"
#include "jaclab/quadrature.hpp"
#include "jaclab/radial.hpp"

namespace jaclab {

struct PerturbationParams {
  int n = 2;
  double p = 2.0;
  double q = 4.0;
  double alpha = -1.5;
  double R = 0.9;
  double gamma = 0.0;  // derived
  double M = 0.0;      // derived

  /// gamma and M from the defining coupling; validates the gamma_of_R
  /// preconditions only (no p is involved at this level).
  static std::pair<double, double> gamma_of_R(double R, double alpha, double q) {
    if (!(q >= 1.0)) throw ConfigError("parameter domain violation: q must be >= 1");
    if (!(R > 0.75 && R < 1.0)) throw ConfigError("parameter domain violation: R must lie in (3/4, 1)");
    if (!(alpha > -q && alpha < -1.0))
      throw ConfigError("parameter domain violation: alpha must lie in (-q, -1)");
    const double one_minus_gR = std::pow(1.0 - R, 1.0 + alpha / q);
    const double gamma = (1.0 - one_minus_gR) / R;
    const double M = one_minus_gR / (1.0 - R);
    return {gamma, M};
  }

  static PerturbationParams make(int n, double p, double q, double alpha, double R) {
    if (n < 2) throw ConfigError("parameter domain violation: n must be >= 2");
    if (!(p >= 1.0)) throw ConfigError("parameter domain violation: p must be >= 1");
    if (!(q > p)) throw ConfigError("parameter domain violation: q must exceed p");
    if (!(q >= n)) throw ConfigError("parameter domain violation: q must be >= n");
    if (!(alpha > -q / p && alpha < -1.0))
      throw ConfigError("parameter domain violation: alpha must lie in (-q/p, -1)");
    PerturbationParams prm;
    prm.n = n;
    prm.p = p;
    prm.q = q;
    prm.alpha = alpha;
    prm.R = R;
    std::tie(prm.gamma, prm.M) = gamma_of_R(R, alpha, q);
    if (!(prm.gamma > 0.75 && prm.gamma < 1.0))
      throw ConfigError("parameter domain violation: derived gamma falls outside (3/4, 1)");
    prm.validate();
    return prm;
  }

  /// Recheck the derived-value invariants (used when loading serialized
  /// params, whose gamma and M are recomputed and cross-checked).
  void validate() const {
    const auto [g, m] = gamma_of_R(R, alpha, q);
    if (std::abs(g - gamma) > 4e-16 * std::abs(g) || std::abs(m - M) > 4e-16 * std::abs(m))
      throw ConfigError("perturbation params: gamma/M inconsistent with the defining coupling");
    if (!(gamma < 1.0 && M > 1.0))
      throw ConfigError("perturbation params: expected gamma < 1 and M > 1");
  }

  double one_minus_gamma_R() const { return 1.0 - gamma * R; }

  /// Outer branch M (gamma R + M(r-R))^{n-1} / r^{n-1} on [R, 1).
  double outer_branch(double r) const {
    return M * std::pow((gamma * R + M * (r - R)) / r, n - 1);
  }
};

class PerturbedDensity {
 public:
  static PerturbedDensity build(const RadialDensity& f, const PerturbationParams& prm,
                                const QuadratureConfig& cfg = {}) {
    if (f.dim() != prm.n) throw ConfigError("perturbation build: dimension mismatch");
    prm.validate();
    const int n = prm.n;
    auto w = [&f, n](double s) { return f(s) * std::pow(s, n - 1); };
    const double mass_R =
        n * integrate_segmented(w, 0.0, prm.R, cfg, f.breakpoints(), f.singular_radii()).value;
    const double mean_R = mass_R / std::pow(prm.R, n);
    if (!(mean_R > 0.0)) throw ConfigError("invalid base density: nonpositive mean over B_R");

    PerturbedDensity out;
    out.params_ = prm;
    out.base_ = f;
    out.base_mean_R_ = mean_R;

    const double inner_scale = std::pow(prm.gamma, n) / mean_R;
    std::vector<double> breaks;
    for (double bk : f.breakpoints())
      if (bk < prm.R) breaks.push_back(bk);
    breaks.push_back(prm.R);
    std::vector<double> singular;
    for (double s : f.singular_radii())
      if (s < prm.R) singular.push_back(s);

    const double inner_lb = inner_scale * f.lower_bound();
    const double outer_lb = std::pow(prm.gamma, n - 1);
    RadialDensity base_copy = f;
    PerturbationParams prm_copy = prm;
    out.density_ = RadialDensity::custom(
        n,
        [base_copy, prm_copy, inner_scale](double r) {
          if (r < prm_copy.R) return inner_scale * base_copy(r);
          return prm_copy.outer_branch(r);
        },
        std::min(inner_lb, outer_lb), std::move(breaks), std::move(singular));

    // The construction forces unit mean over B_1 algebraically
    // (gamma^n R^n from the inner ball plus 1 - (gamma R)^n from the
    // annulus); verify the quadrature agrees.
    const double mean = out.density_.mean(cfg);
    if (std::abs(mean - 1.0) > 1e-9)
      throw NumericError("perturbed density mean deviates from 1 by " + std::to_string(mean - 1.0));
    return out;
  }

  double operator()(double r) const { return density_(r); }
  const RadialDensity& density() const { return density_; }
  const PerturbationParams& params() const { return params_; }
  const RadialDensity& base() const { return base_; }
  double base_mean_R() const { return base_mean_R_; }

 private:
  PerturbationParams params_;
  RadialDensity base_ = RadialDensity::constant(2, 1.0);
  RadialDensity density_ = RadialDensity::constant(2, 1.0);
  double base_mean_R_ = 1.0;
};

/// integral_R^1 f_{gamma,R} r^{n-1} dr = (1 - (gamma R)^n)/n, cross-checked
/// against quadrature of the outer branch to 1e-9.
inline double annulus_mass(const PerturbationParams& prm, const QuadratureConfig& cfg = {}) {
  prm.validate();
  const double closed = (1.0 - std::pow(prm.gamma * prm.R, prm.n)) / prm.n;
  const double quad =
      integrate_weighted([&prm](double r) { return prm.outer_branch(r); }, prm.R, 1.0, prm.n, cfg)
          .value;
  if (std::abs(closed - quad) > 1e-9)
    throw NumericError("annulus mass: closed form and quadrature disagree by " +
                       std::to_string(closed - quad));
  return closed;
}

/// The exact annulus solution rho(r) = gamma R + M (r - R) on [R, 1];
/// rho(1) = 1 by the coupling, and its Jacobian reproduces the outer branch.
inline RadialProfile annulus_profile(const PerturbationParams& prm) {
  prm.validate();
  const double gR = prm.gamma * prm.R;
  const double M = prm.M;
  const double R = prm.R;
  return RadialProfile::from_functions(
      prm.n,
      [gR, M, R](double r) {
        if (r < R - 1e-12 || r > 1.0 + 1e-12)
          throw NumericError("annulus profile evaluated outside [R, 1]");
        return gR + M * (r - R);
      },
      [M](double) { return M; }, R, {}, "annulus", {gR, M, R});
}

struct AnnulusEnergy {
  double exact = 0.0;      // integral_{A(R,1)} |d_r u|^q dx = omega_n M^q (1 - R^n)
  double surrogate = 0.0;  // unweighted M^q (1 - R) = (1 - R)^{1 + alpha}
};

/// Radial q-energy of the annulus solution, exact and in the unweighted
/// form whose power law in (1 - R) is exact.
inline AnnulusEnergy annulus_energy(const PerturbationParams& prm) {
  prm.validate();
  const double log_Mq = prm.q * std::log(prm.M);
  if (log_Mq > 690.0) throw EnergyOverflow("annulus energy overflow: q log M too large", log_Mq);
  AnnulusEnergy e;
  const double Mq = std::exp(log_Mq);
  e.exact = unit_ball_volume(prm.n) * Mq * (1.0 - std::pow(prm.R, prm.n));
  e.surrogate = Mq * (1.0 - prm.R);
  return e;
}

struct TailReport {
  double value = 0.0;            // integral_{A(R,1)} |f_{gamma,R}|^p dx
  double predicted_scale = 0.0;  // (1-R)^{alpha p / q + 1}, for sweep fitting
};

/// L^p mass of the perturbation on the annulus (the outer branch does not
/// depend on the base density).
inline TailReport lp_tail(const PerturbationParams& prm, double p, const QuadratureConfig& cfg = {}) {
  prm.validate();
  if (p < 1.0) throw ConfigError("lp_tail: p must be >= 1");
  TailReport rep;
  rep.value = unit_sphere_area(prm.n) *
              integrate_weighted([&prm, p](double r) { return std::pow(prm.outer_branch(r), p); },
                                 prm.R, 1.0, prm.n, cfg)
                  .value;
  rep.predicted_scale = std::pow(1.0 - prm.R, prm.alpha * p / prm.q + 1.0);
  return rep;
}

struct LloglTail {
  double value = 0.0;             // two-pass L log L norm of the outer branch on A(R,1)
  double l1_mass = 0.0;           // its L^1 mass, used inside the log
  double value_unweighted = 0.0;  // 1-D analogue without the r^{n-1} weight
  double l1_mass_unweighted = 0.0;
};

/// L log L mass of the perturbation on the annulus. Both the genuine
/// n-dimensional norm and the unweighted 1-D analogue are reported: the
/// (1-R)^{alpha/q+1} log(e + 1/(1-R)) rate is exact for the latter, while
/// the former carries the volume constant inside the log.
inline LloglTail llogl_tail(const PerturbationParams& prm, const QuadratureConfig& cfg = {}) {
  prm.validate();
  LloglTail rep;
  const double sph = unit_sphere_area(prm.n);
  const int n = prm.n;
  auto g = [&prm](double r) { return prm.outer_branch(r); };

  auto weighted = [&g, n](double r) { return g(r) * std::pow(r, n - 1); };
  rep.l1_mass = sph * integrate(weighted, prm.R, 1.0, cfg).value;
  const double m = rep.l1_mass;
  rep.value = sph * integrate(
                        [&g, m, n](double r) {
                          const double v = g(r);
                          return v * std::log(M_E + v / m) * std::pow(r, n - 1);
                        },
                        prm.R, 1.0, cfg)
                        .value;

  rep.l1_mass_unweighted = integrate(g, prm.R, 1.0, cfg).value;
  const double mu = rep.l1_mass_unweighted;
  rep.value_unweighted = integrate(
                             [&g, mu](double r) {
                               const double v = g(r);
                               return v * std::log(M_E + v / mu);
                             },
                             prm.R, 1.0, cfg)
                             .value;
  return rep;
}

}  // namespace jaclab
