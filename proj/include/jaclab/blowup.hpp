#pragma once

// Parameter-sweep harness: drives the perturbation family along an R-grid
// approaching 1, records distances, tails and annulus energies per row,
// and recovers the governing power-law exponents by log-log least squares.
// Also: the radial a-priori estimate check and the L^p-but-not-L^q
// sharpness witness.

#include <atomic>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "jaclab/errors.hpp"
#include "jaclab/fit.hpp"
#include "jaclab/norms.hpp"
#include "jaclab/perturbation.hpp"
#include "jaclab/quadrature.hpp"
#include "jaclab/radial.hpp"

namespace jaclab {

struct ScanRow {
  double R = 0.0;
  double gamma = 0.0;
  double M = 0.0;
  double dist_p = 0.0;
  double energy_exact = 0.0;
  double energy_surrogate = 0.0;
  double lp_tail = 0.0;
  double llogl_tail = 0.0;             // two-pass norm of the tail on A(R,1)
  double llogl_tail_unweighted = 0.0;  // 1-D analogue; its rate in (1-R) is exact
  double min_density = 0.0;            // inf of the built density
  bool lower_bound_ok = false;         // min_density >= (1 - eta) * lower bound of f
  bool ok = false;
  std::string error;
};

struct ScanFits {
  LinearFit energy_exact;        // log energy vs log(1-R); expect 1 + alpha
  LinearFit energy_surrogate;    // exact power law by construction
  LinearFit lp_tail;             // expect alpha p / q + 1
  LinearFit llogl;               // log-corrected n-D tail
  LinearFit llogl_unweighted;    // log-corrected 1-D tail; expect alpha/q + 1
};

struct ScanReport {
  int n = 2;
  double p = 2.0, q = 4.0, alpha = -1.5;
  double epsilon = 0.1;  // acceptance threshold on the final distance
  double eta = 0.05;     // relaxation of the lower bound
  std::vector<ScanRow> rows;
  ScanFits fits;
  bool dist_within_epsilon = false;  // final row distance <= epsilon
  std::size_t failed_rows = 0;
};

namespace detail {

inline std::size_t thread_cap(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("JACLAB_THREADS")) {
    const long v = std::atol(env);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

inline double density_minimum(const RadialDensity& f, int samples = 512) {
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= samples; ++i) lo = std::min(lo, f(static_cast<double>(i) / samples));
  return lo;
}

}  // namespace detail

/// One row per R: all perturbation/norm quantities plus the fitted slopes
/// of the blow-up and tail-vanishing power laws against (1 - R).
inline ScanReport scan(const RadialDensity& f, int n, double p, double q, double alpha,
                       std::span<const double> R_list, const QuadratureConfig& cfg = {},
                       std::size_t threads = 0) {
  if (R_list.size() < 3)
    throw ConfigError("fit refused: need at least 3 sweep points");
  for (std::size_t i = 0; i < R_list.size(); ++i) {
    if (!(R_list[i] > 0.75 && R_list[i] < 1.0))
      throw ConfigError("scan: R values must lie in (3/4, 1)");
    if (i > 0 && !(R_list[i] > R_list[i - 1]))
      throw ConfigError("scan: R values must be strictly increasing");
  }

  ScanReport rep;
  rep.n = n;
  rep.p = p;
  rep.q = q;
  rep.alpha = alpha;
  rep.rows.resize(R_list.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= R_list.size()) return;
      ScanRow& row = rep.rows[i];
      row.R = R_list[i];
      try {
        auto prm = PerturbationParams::make(n, p, q, alpha, R_list[i]);
        row.gamma = prm.gamma;
        row.M = prm.M;
        auto pert = PerturbedDensity::build(f, prm, cfg);
        row.dist_p = dist(f, pert.density(), p, cfg);
        auto energy = annulus_energy(prm);
        row.energy_exact = energy.exact;
        row.energy_surrogate = energy.surrogate;
        row.lp_tail = lp_tail(prm, p, cfg).value;
        auto ll = llogl_tail(prm, cfg);
        row.llogl_tail = ll.value;
        row.llogl_tail_unweighted = ll.value_unweighted;
        row.min_density = detail::density_minimum(pert.density());
        row.lower_bound_ok = row.min_density >= (1.0 - rep.eta) * f.lower_bound();
        row.ok = true;
      } catch (const Error& e) {
        row.ok = false;
        row.error = e.what();
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = std::string("unexpected: ") + e.what();
      }
    }
  };
  const std::size_t nthreads = std::min(detail::thread_cap(threads), R_list.size());
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<double> x, e_ex, e_su, tails, ll_c, llu_c;
  for (const auto& row : rep.rows) {
    if (!row.ok) {
      ++rep.failed_rows;
      continue;
    }
    const double one_minus_R = 1.0 - row.R;
    const double logfac = std::log(M_E + 1.0 / one_minus_R);
    x.push_back(one_minus_R);
    e_ex.push_back(row.energy_exact);
    e_su.push_back(row.energy_surrogate);
    tails.push_back(row.lp_tail);
    ll_c.push_back(row.llogl_tail / logfac);
    llu_c.push_back(row.llogl_tail_unweighted / logfac);
  }
  if (x.size() < 3) throw ConfigError("fit refused: fewer than 3 successful rows");

  rep.fits.energy_exact = loglog_fit(x, e_ex);
  rep.fits.energy_surrogate = loglog_fit(x, e_su);
  rep.fits.lp_tail = loglog_fit(x, tails);
  rep.fits.llogl = loglog_fit(x, ll_c);
  rep.fits.llogl_unweighted = loglog_fit(x, llu_c);

  for (auto it = rep.rows.rbegin(); it != rep.rows.rend(); ++it) {
    if (it->ok) {
      rep.dist_within_epsilon = it->dist_p <= rep.epsilon;
      break;
    }
  }
  return rep;
}

struct EstimateReport {
  int n = 2;
  double p = 2.0;
  double c = 0.0;    // lower bound entering the estimate
  double lhs = 0.0;  // (bare p-energy of the radial solution)^{1/p}
  double rhs = 0.0;  // ||f||_p / c^{(n-1)/n} + ||f||_p^{1/n}  (unit ball)
  double ratio = 0.0;
};

/// Ratio of the two sides of the radial a-priori gradient estimate on the
/// unit ball. The comparability constant is dimensional and intentionally
/// not asserted; callers track the ratio across families.
inline EstimateReport estimate_check(const RadialDensity& f, double p,
                                     const QuadratureConfig& cfg = {}) {
  if (!(f.lower_bound() > 0.0))
    throw ConfigError("estimate_check: density must have a positive lower bound");
  const double mean = f.mean(cfg);
  if (std::abs(mean - 1.0) > 1e-6)
    throw ConfigError("estimate_check: density must have unit mean (got " + std::to_string(mean) + ")");

  EstimateReport rep;
  rep.n = f.dim();
  rep.p = p;
  rep.c = f.lower_bound();
  auto prof = solve_radial(f, cfg);
  auto energy = sobolev_energy(prof, p, 0.0, 1.0, cfg);
  if (!energy.finite) throw NumericError("estimate_check: radial p-energy is infinite");
  rep.lhs = std::pow(energy.value, 1.0 / p);
  const double fp = lp_norm(f, p, 0.0, 1.0, cfg).value;
  const int n = rep.n;
  rep.rhs = fp / std::pow(rep.c, (n - 1.0) / n) + std::pow(fp, 1.0 / n);
  rep.ratio = rep.lhs / rep.rhs;
  return rep;
}

struct SharpnessReport {
  int n = 2;
  double p = 2.0, q = 4.0, delta = 0.05;
  double r0 = 0.9, width = 0.02, c = 0.5, kappa = 0.0;
  std::vector<double> q_eps;       // truncation radii for the q-energy (6 levels)
  std::vector<double> q_energies;  // strictly increasing, unbounded as eps -> 0
  std::vector<double> p_eps;       // deeper truncation sequence for the p-norm
  std::vector<double> p_norms;     // Cauchy: differences fall below 1e-6
  double p_norm_final_delta = 0.0;
  bool p_norm_cauchy = false;
};

/// Witness density f = c + kappa |r - r0|^{-1/q} (supported near r0, unit
/// mean) lying in L^p but not L^q. Truncated q-energies of its radial
/// solution grow without bound as the truncation shrinks toward r0 while
/// the truncated p-norms converge.
inline SharpnessReport sharpness_family(int n, double p, double q, double delta,
                                        const QuadratureConfig& cfg = {}, double r0 = 0.9,
                                        double width = 0.02, double c = 0.5) {
  if (!(p >= 1.0) || !(q > p)) throw ConfigError("sharpness_family: need 1 <= p < q");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("sharpness_family: delta must lie in (0,1)");
  if (!(r0 > delta && r0 < 1.0)) throw ConfigError("sharpness_family: need r0 in (delta, 1)");
  width = std::min({width, 0.5 * (r0 - delta), 0.5 * (1.0 - r0)});

  SharpnessReport rep;
  rep.n = n;
  rep.p = p;
  rep.q = q;
  rep.delta = delta;
  rep.r0 = r0;
  rep.width = width;
  rep.c = c;

  // kappa from unit mean: c + kappa * n * integral_W |r-r0|^{-1/q} r^{n-1} dr = 1.
  QuadratureConfig scfg = cfg;
  scfg.singular_left = false;
  scfg.singular_right = false;
  const double shape =
      n * integrate_segmented([r0, q, n](double r) { return std::pow(std::abs(r - r0), -1.0 / q) * std::pow(r, n - 1); },
                              r0 - width, r0 + width, scfg, {}, std::vector<double>{r0})
              .value;
  rep.kappa = (1.0 - c) / shape;

  auto witness = RadialDensity::singular_power(n, c, rep.kappa, r0, -1.0 / q, width);
  auto prof = solve_radial(witness, cfg);

  // The truncated integrands are steep at the cut but regular; plain
  // adaptive bisection concentrates panels there on its own.
  auto truncated_energy = [&](double eps) {
    EnergyResult left = sobolev_energy(prof, q, delta, r0 - eps, cfg);
    EnergyResult right = sobolev_energy(prof, q, r0 + eps, 1.0, cfg);
    if (!left.finite || !right.finite) throw NumericError("sharpness: truncated energy diverged");
    return left.value + right.value;
  };
  for (int k = 0; k < 6; ++k) {
    const double eps = width * std::ldexp(1.0, -k);
    rep.q_eps.push_back(eps);
    rep.q_energies.push_back(truncated_energy(eps));
  }

  auto truncated_pnorm = [&](double eps) {
    const double left = integrate_segmented(
                            [&witness, p, n](double r) { return std::pow(witness(r), p) * std::pow(r, n - 1); },
                            0.0, r0 - eps, cfg, witness.breakpoints())
                            .value;
    const double right = integrate_segmented(
                             [&witness, p, n](double r) { return std::pow(witness(r), p) * std::pow(r, n - 1); },
                             r0 + eps, 1.0, cfg, witness.breakpoints())
                             .value;
    return std::pow(unit_sphere_area(n) * (left + right), 1.0 / p);
  };
  const double eps_floor = 64.0 * std::numeric_limits<double>::epsilon() * r0;
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int j = 0; j < 60; ++j) {
    const double eps = width * std::ldexp(1.0, -j);
    if (eps < eps_floor) break;  // the cut would collide with the singularity
    const double v = truncated_pnorm(eps);
    rep.p_eps.push_back(eps);
    rep.p_norms.push_back(v);
    if (j > 0) {
      rep.p_norm_final_delta = std::abs(v - prev);
      if (rep.p_norm_final_delta < 1e-6) {
        rep.p_norm_cauchy = true;
        break;
      }
    }
    prev = v;
  }
  return rep;
}

}  // namespace jaclab
