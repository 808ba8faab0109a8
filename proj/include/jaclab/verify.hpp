#pragma once

// Invariant suites run by the `verify` command: each module's structural
// properties checked at desk scale with seeded fixtures. A fault-injection
// hook perturbs a named check's computation so the failure path itself can
// be exercised end to end.

#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "jaclab/blowup.hpp"
#include "jaclab/fit.hpp"
#include "jaclab/minimality.hpp"
#include "jaclab/norms.hpp"
#include "jaclab/perturbation.hpp"
#include "jaclab/quadrature.hpp"
#include "jaclab/radial.hpp"

namespace jaclab {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  unsigned seed = 0;
  std::string inject_fault;  // "suite.check" to tamper with one computation
  std::vector<std::string> suites;  // empty = all
};

namespace detail {

inline RadialDensity random_piecewise(std::mt19937& rng, int n, double c) {
  std::uniform_int_distribution<int> npieces(3, 8);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int k = npieces(rng);
  std::vector<double> breaks(k - 1);
  for (double& b : breaks) b = 0.05 + 0.9 * u01(rng);
  std::sort(breaks.begin(), breaks.end());
  for (std::size_t i = 1; i < breaks.size(); ++i)
    if (breaks[i] - breaks[i - 1] < 1e-3) breaks[i] = breaks[i - 1] + 1e-3;
  std::vector<double> h(k);
  for (double& v : h) v = u01(rng);
  h[static_cast<std::size_t>(u01(rng) * k) % k] = 0.0;
  double mh = 0.0, lo = 0.0;
  for (int i = 0; i < k; ++i) {
    const double hi = (i + 1 < k) ? breaks[i] : 1.0;
    mh += h[i] * (std::pow(hi, n) - std::pow(lo, n));
    lo = hi;
  }
  std::vector<double> vals(k);
  const double t = mh > 0 ? (1.0 - c) / mh : 0.0;
  for (int i = 0; i < k; ++i) vals[i] = c + t * h[i];
  return RadialDensity::piecewise_constant(n, breaks, vals);
}

class Suite {
 public:
  Suite(std::string name, std::vector<CheckResult>& sink, const VerifyOptions& opts)
      : name_(std::move(name)), sink_(sink), opts_(opts) {}

  bool fault(const std::string& check) const {
    return opts_.inject_fault == name_ + "." + check;
  }

  void check(const std::string& check, bool ok, const std::string& detail = "") {
    sink_.push_back({name_, check, ok, detail});
  }

  template <class Fn>
  void guarded(const std::string& check, Fn&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      sink_.push_back({name_, check, false, std::string("exception: ") + e.what()});
    }
  }

 private:
  std::string name_;
  std::vector<CheckResult>& sink_;
  const VerifyOptions& opts_;
};

}  // namespace detail

inline void verify_quadrature(std::vector<CheckResult>& out, const VerifyOptions& opts) {
  detail::Suite s("quadrature", out, opts);
  std::mt19937 rng(opts.seed + 1);
  QuadratureConfig cfg;
  const double tol = 10.0 * std::max(cfg.abs_tol, cfg.rel_tol);

  s.guarded("linearity", [&] {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    auto g = [](double x) { return std::exp(-x) * std::cos(3.0 * x); };
    auto h = [](double x) { return 1.0 / (1.0 + x * x); };
    double worst = 0.0;
    for (int trial = 0; trial < 8; ++trial) {
      const double a = u(rng), b = u(rng);
      const double lhs = integrate([&](double x) { return a * g(x) + b * h(x); }, 0.0, 2.0, cfg).value;
      const double rhs = a * integrate(g, 0.0, 2.0, cfg).value + b * integrate(h, 0.0, 2.0, cfg).value;
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    s.check("linearity", worst <= tol, "max deviation " + std::to_string(worst));
  });

  s.guarded("additivity", [&] {
    auto g = [](double x) { return std::exp(-x) * std::cos(3.0 * x); };
    const double whole = integrate(g, 0.0, 2.0, cfg).value;
    const double split = integrate(g, 0.0, 0.7, cfg).value + integrate(g, 0.7, 2.0, cfg).value;
    s.check("additivity", std::abs(whole - split) <= tol);
  });

  s.guarded("polynomial_exactness", [&] {
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      double c[14];
      for (double& ci : c) ci = coef(rng);
      double exact = 0.0;
      for (int k = 0; k < 14; ++k) exact += c[k] / (k + 1);
      const double got = integrate(
                             [&c](double x) {
                               double acc = 0.0, xp = 1.0;
                               for (double ci : c) {
                                 acc += ci * xp;
                                 xp *= x;
                               }
                               return acc;
                             },
                             0.0, 1.0, cfg)
                             .value;
      worst = std::max(worst, std::abs(got - exact));
    }
    s.check("polynomial_exactness", worst <= 1e-13, "max deviation " + std::to_string(worst));
  });
}

inline void verify_radial(std::vector<CheckResult>& out, const VerifyOptions& opts) {
  detail::Suite s("radial", out, opts);
  std::mt19937 rng(opts.seed + 2);
  QuadratureConfig cfg;

  s.guarded("roundtrip", [&] {
    std::uniform_real_distribution<double> radius(0.05, 1.0);
    std::vector<RadialDensity> densities;
    densities.push_back(RadialDensity::constant(2, 1.0));
    densities.push_back(RadialDensity::power(2, 1.5, 1.0));
    for (int i = 0; i < 20; ++i) densities.push_back(detail::random_piecewise(rng, 2, 0.5));
    const double tamper = s.fault("roundtrip") ? 1e-3 : 0.0;
    double worst = 0.0;
    for (const auto& f : densities) {
      auto p = solve_radial(f, cfg);
      for (int i = 0; i < 100; ++i) {
        const double r = radius(rng);
        const double want = f(r);
        const double got = jacobian(p, r) + tamper;
        if (want > 1e-12) worst = std::max(worst, std::abs(got - want) / want);
      }
    }
    s.check("roundtrip", worst <= 1e-7, "max relative residual " + std::to_string(worst));
  });

  s.guarded("boundary_normalization", [&] {
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      auto f = detail::random_piecewise(rng, 2, 0.5);
      worst = std::max(worst, std::abs(solve_radial(f, cfg).rho(1.0) - 1.0));
    }
    s.check("boundary_normalization", worst <= 1e-8, "max |rho(1)-1| " + std::to_string(worst));
  });

  s.guarded("monotonicity", [&] {
    bool ok = true;
    for (int i = 0; i < 5; ++i) {
      auto p = solve_radial(detail::random_piecewise(rng, 2, 0.5), cfg);
      double prev = 0.0;
      for (int k = 1; k <= 64; ++k) {
        const double cur = p.rho(k / 64.0);
        if (cur < prev - 1e-12) ok = false;
        prev = cur;
      }
    }
    s.check("monotonicity", ok);
  });

  s.guarded("change_of_variables", [&] {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      auto f = detail::random_piecewise(rng, 2, 0.5);
      auto p = solve_radial(f, cfg);
      double a = u(rng), b = u(rng);
      if (a > b) std::swap(a, b);
      if (b - a < 0.05) b = std::min(1.0, a + 0.05);
      const double vol = image_volume(p, a, b);
      const double mass = unit_sphere_area(2) *
                          integrate_segmented([&f](double r) { return f(r) * r; }, a, b, cfg,
                                              f.breakpoints())
                              .value;
      worst = std::max(worst, std::abs(vol - mass) / std::max(1e-12, mass));
    }
    s.check("change_of_variables", worst <= 1e-7, "max relative deviation " + std::to_string(worst));
  });

  s.guarded("lower_bound_propagation", [&] {
    bool ok = true;
    for (int i = 0; i < 5; ++i) {
      auto p = solve_radial(detail::random_piecewise(rng, 2, 0.5), cfg);
      for (int k = 1; k <= 32; ++k) {
        const double r = k / 32.0;
        if (p.rho(r) / r < std::sqrt(0.5) - 1e-10) ok = false;
      }
    }
    s.check("lower_bound_propagation", ok);
  });
}

inline void verify_norms(std::vector<CheckResult>& out, const VerifyOptions& opts) {
  detail::Suite s("norms", out, opts);
  std::mt19937 rng(opts.seed + 3);

  s.guarded("triangle_inequality", [&] {
    bool ok = true;
    for (int i = 0; i < 6; ++i) {
      auto a = detail::random_piecewise(rng, 2, 0.3);
      auto b = detail::random_piecewise(rng, 2, 0.4);
      auto c = detail::random_piecewise(rng, 2, 0.5);
      if (dist(a, c, 2.0) > dist(a, b, 2.0) + dist(b, c, 2.0) + 1e-9) ok = false;
    }
    s.check("triangle_inequality", ok);
  });

  s.guarded("homogeneity", [&] {
    std::uniform_real_distribution<double> ts(0.1, 5.0);
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      auto f = detail::random_piecewise(rng, 2, 0.5);
      const double t = ts(rng);
      const double lhs = lp_norm(f.scaled(t), 2.0).value;
      const double rhs = t * lp_norm(f, 2.0).value;
      worst = std::max(worst, std::abs(lhs - rhs) / rhs);
    }
    s.check("homogeneity", worst <= 1e-10, "max relative deviation " + std::to_string(worst));
  });

  s.guarded("llogl_dominates_l1", [&] {
    bool ok = true;
    for (int i = 0; i < 6; ++i) {
      auto f = detail::random_piecewise(rng, 2, 0.2);
      auto ll = llogl_norm(f);
      if (ll.value < lp_norm(f, 1.0).value - 1e-12) ok = false;
      if (ll.value < ll.l1_mass) ok = false;
    }
    s.check("llogl_dominates_l1", ok);
  });

  s.guarded("two_pass_stability", [&] {
    auto f = detail::random_piecewise(rng, 2, 0.5);
    auto rep = llogl_norm(f);
    QuadratureConfig cfg;
    double worst = 0.0;
    for (double dm : {1e-9, -1e-9}) {
      const double m2 = rep.l1_mass + dm;
      const double v2 =
          unit_sphere_area(2) *
          integrate_segmented([&f, m2](double r) { return f(r) * std::log(M_E + f(r) / m2) * r; },
                              0.0, 1.0, cfg, f.breakpoints())
              .value;
      worst = std::max(worst, std::abs(v2 - rep.value));
    }
    s.check("two_pass_stability", worst < 1e-6, "max shift " + std::to_string(worst));
  });
}

inline void verify_perturbation(std::vector<CheckResult>& out, const VerifyOptions& opts) {
  detail::Suite s("perturbation", out, opts);
  std::mt19937 rng(opts.seed + 4);
  QuadratureConfig cfg;

  s.guarded("defining_relation", [&] {
    std::uniform_real_distribution<double> Rs(0.76, 0.9999), qs(2.0, 6.0), u01(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 30; ++i) {
      const double q = qs(rng);
      const double R = Rs(rng);
      const double alpha = -1.0 - u01(rng) * (q - 1.0) * 0.98 - 1e-6;
      auto [gamma, M] = PerturbationParams::gamma_of_R(R, alpha, q);
      const double rhs = std::pow(1.0 - R, 1.0 + alpha / q);
      worst = std::max(worst, std::abs(1.0 - gamma * R - rhs) / rhs);
    }
    s.check("defining_relation", worst <= 8e-16, "max relative deviation " + std::to_string(worst));
  });

  s.guarded("unit_mean", [&] {
    double worst = 0.0;
    std::uniform_real_distribution<double> Rs(0.8, 0.995), u01(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
      auto f = detail::random_piecewise(rng, 2, 0.5);
      PerturbationParams prm;
      for (;;) {
        const double q = 2.5 + 3.5 * u01(rng);
        const double p = 1.0 + u01(rng) * (q - 1.5);
        const double alpha = -1.0 + (std::max(-q / p, -6.0) + 1.0) * (0.1 + 0.8 * u01(rng));
        try {
          prm = PerturbationParams::make(2, p, q, alpha, Rs(rng));
          break;
        } catch (const ConfigError&) {
        }
      }
      auto pert = PerturbedDensity::build(f, prm, cfg);
      worst = std::max(worst, std::abs(pert.density().mean(cfg) - 1.0));
    }
    s.check("unit_mean", worst <= 1e-9, "max |mean-1| " + std::to_string(worst));
  });

  s.guarded("outer_branch_floor", [&] {
    bool ok = true;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (double R : {0.9, 0.99, 0.999}) {
      auto prm = PerturbationParams::make(2, 2.0, 4.0, -1.5, R);
      for (int i = 0; i < 50; ++i) {
        const double r = prm.R + (1.0 - prm.R) * u01(rng);
        if (prm.outer_branch(r) < prm.gamma - 1e-12) ok = false;
      }
    }
    s.check("outer_branch_floor", ok);
  });

  s.guarded("energy_identity", [&] {
    auto prm = PerturbationParams::make(2, 2.0, 4.0, -1.5, 0.9);
    auto e = annulus_energy(prm);
    auto prof = annulus_profile(prm);
    const auto radial_part =
        sobolev_energy(prof, prm.q, prm.R, 1.0, cfg, EnergyTerms::kRadialOnly);
    const double byquad = unit_sphere_area(2) * radial_part.value;
    const double dev1 = std::abs(e.exact - byquad) / byquad;
    const double sur = std::pow(1.0 - prm.R, 1.0 + prm.alpha);
    const double dev2 = std::abs(e.surrogate - sur) / sur;
    s.check("energy_identity", dev1 <= 1e-10 && dev2 <= 1e-10,
            "deviations " + std::to_string(dev1) + ", " + std::to_string(dev2));
  });

  s.guarded("dist_vanishes", [&] {
    auto f = RadialDensity::constant(2, 1.0);
    double prev = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (int j = 7; j <= 13; ++j) {
      auto prm = PerturbationParams::make(2, 2.0, 4.0, -1.5, 1.0 - std::ldexp(1.0, -j));
      const double d = dist(f, PerturbedDensity::build(f, prm, cfg).density(), 2.0, cfg);
      if (d >= prev) ok = false;
      prev = d;
    }
    s.check("dist_vanishes", ok && prev < 1.0, "final distance " + std::to_string(prev));
  });

  s.guarded("energy_diverges", [&] {
    double prev = 0.0;
    bool ok = true;
    for (int j = 4; j <= 10; ++j) {
      auto prm = PerturbationParams::make(2, 2.0, 4.0, -1.5, 1.0 - std::ldexp(1.0, -j));
      const double e = annulus_energy(prm).exact;
      if (j > 4) {
        const double ratio = e / prev;
        if (std::abs(ratio - std::sqrt(2.0)) > 0.1 * std::sqrt(2.0)) ok = false;
        if (e <= prev) ok = false;
      }
      prev = e;
    }
    s.check("energy_diverges", ok);
  });
}

inline void verify_blowup(std::vector<CheckResult>& out, const VerifyOptions& opts) {
  detail::Suite s("blowup", out, opts);
  QuadratureConfig cfg;
  const std::vector<double> sweep{0.9, 0.99, 0.999, 0.9999};

  s.guarded("energy_slope", [&] {
    auto rep = scan(RadialDensity::constant(2, 1.0), 2, 2.0, 4.0, -1.5, sweep, cfg);
    bool increasing = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
      if (rep.rows[i].energy_exact <= rep.rows[i - 1].energy_exact) increasing = false;
    const bool slope_ok = std::abs(rep.fits.energy_exact.slope + 0.5) <= 0.05 &&
                          std::abs(rep.fits.energy_surrogate.slope + 0.5) <= 1e-10;
    s.check("energy_slope", increasing && slope_ok,
            "exact slope " + std::to_string(rep.fits.energy_exact.slope));

    bool tails_decreasing = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
      if (rep.rows[i].lp_tail >= rep.rows[i - 1].lp_tail) tails_decreasing = false;
    s.check("tail_slope", tails_decreasing && std::abs(rep.fits.lp_tail.slope - 0.25) <= 0.05,
            "tail slope " + std::to_string(rep.fits.lp_tail.slope));
  });

  s.guarded("llogl_bounded", [&] {
    auto rep = scan(RadialDensity::constant(2, 1.0), 2, 1.0, 4.0, -1.5, sweep, cfg);
    double K = 0.0;
    bool decreasing = true;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      const auto& row = rep.rows[i];
      const double shape =
          std::pow(1.0 - row.R, -1.5 / 4.0 + 1.0) * std::log(M_E + 1.0 / (1.0 - row.R));
      K = std::max(K, row.llogl_tail / shape);
      if (i > 0 && row.llogl_tail >= rep.rows[i - 1].llogl_tail) decreasing = false;
    }
    s.check("llogl_bounded", decreasing && K < 2.0 * M_PI + 0.5,
            "sweep-wide constant " + std::to_string(K));
  });

  s.guarded("fit_stability", [&] {
    auto full = scan(RadialDensity::constant(2, 1.0), 2, 2.0, 4.0, -1.5, sweep, cfg);
    double worst = 0.0;
    for (std::size_t drop = 0; drop < sweep.size(); ++drop) {
      std::vector<double> rs;
      for (std::size_t i = 0; i < sweep.size(); ++i)
        if (i != drop) rs.push_back(sweep[i]);
      auto part = scan(RadialDensity::constant(2, 1.0), 2, 2.0, 4.0, -1.5, rs, cfg);
      worst = std::max(worst, std::abs(part.fits.energy_exact.slope - full.fits.energy_exact.slope));
      worst = std::max(worst, std::abs(part.fits.lp_tail.slope - full.fits.lp_tail.slope));
    }
    s.check("fit_stability", worst < 0.02, "max slope shift " + std::to_string(worst));
  });
}

inline void verify_minimality(std::vector<CheckResult>& out, const VerifyOptions& opts) {
  detail::Suite s("minimality", out, opts);
  std::mt19937 rng(opts.seed + 5);
  auto prm = PerturbationParams::make(2, 2.0, 4.0, -1.5, 0.9);

  s.guarded("jacobian_invariance", [&] {
    auto twist = random_twist(prm, rng);
    const double res_c = quasimin_ratio(twist_competitor(prm, twist, 128, 128), prm, prm.q)
                             .jacobian_residual;
    const double res_f = quasimin_ratio(twist_competitor(prm, twist, 256, 256), prm, prm.q)
                             .jacobian_residual;
    const double order = std::log2(res_c / res_f);
    s.check("jacobian_invariance", order >= 1.5 && res_c < 5e-3,
            "order " + std::to_string(order) + ", residual " + std::to_string(res_c));
  });

  s.guarded("monotone_energy", [&] {
    double prev = 0.0;
    bool ok = true;
    for (double scale : {0.0, 0.5, 1.0, 2.0}) {
      TwistProfile t{[scale](double r) { return scale * 0.5 * (1.0 - r); },
                     [scale](double) { return -scale * 0.5; }};
      const double e = quasimin_ratio(twist_competitor(prm, t, 128, 128), prm, prm.q).rhs_energy;
      if (e < prev - 1e-12) ok = false;
      prev = e;
    }
    s.check("monotone_energy", ok);
  });

  s.guarded("first_moment_margin", [&] {
    bool ok = true;
    double least = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 5; ++trial) {
      auto rep = quasimin_ratio(twist_competitor(prm, random_twist(prm, rng), 128, 128), prm, prm.q);
      least = std::min(least, rep.first_moment_margin);
      if (rep.first_moment_margin < 0.0) ok = false;
      if (rep.lhs_energy > rep.rhs_energy) ok = false;
    }
    s.check("first_moment_margin", ok, "least margin " + std::to_string(least));
  });

  s.guarded("partition_threshold", [&] {
    const double want = (1.0 - std::pow(prm.gamma * prm.R, 2)) / 4.0;
    s.check("partition_threshold", partition_threshold(prm) == want);
  });

  s.guarded("weakened_boundary", [&] {
    auto base = random_twist(prm, rng);
    TwistProfile shifted{[base](double r) { return base.h(r) + 0.25; }, base.dh};
    auto r0 = quasimin_ratio(twist_competitor(prm, base, 128, 128), prm, prm.q);
    auto r1 = quasimin_ratio(
        twist_competitor(prm, shifted, 128, 128, BoundaryCondition::kSphere), prm, prm.q);
    const bool same = std::abs(r0.rhs_energy - r1.rhs_energy) <= 1e-12 * r0.rhs_energy &&
                      std::abs(r0.first_moment_lhs - r1.first_moment_lhs) <=
                          1e-12 * r0.first_moment_lhs;
    s.check("weakened_boundary", same && r1.boundary_ok);
  });
}

/// Run the requested suites (all when the filter is empty).
inline std::vector<CheckResult> run_verification(const VerifyOptions& opts) {
  std::vector<CheckResult> results;
  auto wanted = [&](const char* name) {
    if (opts.suites.empty()) return true;
    for (const auto& s : opts.suites)
      if (s == name) return true;
    return false;
  };
  if (wanted("quadrature")) verify_quadrature(results, opts);
  if (wanted("radial")) verify_radial(results, opts);
  if (wanted("norms")) verify_norms(results, opts);
  if (wanted("perturbation")) verify_perturbation(results, opts);
  if (wanted("blowup")) verify_blowup(results, opts);
  if (wanted("minimality")) verify_minimality(results, opts);
  return results;
}

}  // namespace jaclab
