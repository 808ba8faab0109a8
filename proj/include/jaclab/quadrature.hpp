#pragma once

// One-dimensional adaptive quadrature on finite intervals.
//
// Scheme: Gauss-Kronrod 7/15 panels refined worst-first by interval
// bisection, with the embedded |G7 - K15| error estimate. Endpoints flagged
// as singular are handled by geometric grading toward the endpoint (ratio
// 1/2) plus extrapolation of the geometric panel tail, which resolves
// integrable power singularities without a change of variables.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "jaclab/errors.hpp"

namespace jaclab {

struct QuadratureConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  std::size_t max_subdivisions = std::size_t{1} << 16;  // total GK15 panel budget
  bool singular_left = false;
  bool singular_right = false;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;      // achieved absolute error estimate
  std::size_t panels = 0;  // GK15 evaluations spent
};

namespace detail {

// Gauss-Kronrod 7/15 nodes and weights (positive half; node 0 shared).
inline constexpr double kGK15Nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kK15Weights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kG7Weights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

// One GK15 panel. Throws InvalidIntegrand on a non-finite sample.
template <class F>
Panel gk15(F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);

  double fv[15];
  const double fc = f(c);
  fv[14] = fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = h * kGK15Nodes[i];
    fv[2 * i] = f(c - dx);
    fv[2 * i + 1] = f(c + dx);
  }
  for (int i = 0; i < 15; ++i) {
    if (!std::isfinite(fv[i])) {
      const double where = (i == 14) ? c : (i % 2 ? c + h * kGK15Nodes[i / 2] : c - h * kGK15Nodes[i / 2]);
      throw InvalidIntegrand("invalid integrand: non-finite sample", where);
    }
  }

  double resk = kK15Weights[7] * fc;
  double resg = kG7Weights[3] * fc;
  double resabs = std::abs(resk);
  for (int i = 0; i < 7; ++i) {
    const double sum = fv[2 * i] + fv[2 * i + 1];
    resk += kK15Weights[i] * sum;
    resabs += kK15Weights[i] * (std::abs(fv[2 * i]) + std::abs(fv[2 * i + 1]));
    if (i % 2 == 1) resg += kG7Weights[i / 2] * sum;
  }
  const double mean = 0.5 * resk;
  double resasc = kK15Weights[7] * std::abs(fc - mean);
  for (int i = 0; i < 7; ++i)
    resasc += kK15Weights[i] * (std::abs(fv[2 * i] - mean) + std::abs(fv[2 * i + 1] - mean));

  double err = std::abs((resk - resg) * h);
  resasc *= h;
  resabs *= h;
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  const double eps50 = 50.0 * std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / eps50) err = std::max(err, eps50 * resabs);

  return Panel{a, b, resk * h, err};
}

// Plain worst-first adaptive refinement over [a, b]. Does not throw on
// unmet tolerance; the caller aggregates and decides.
template <class F>
QuadResult adapt(F&& f, double a, double b, double abs_tol, double rel_tol, std::size_t budget,
                 std::size_t& used) {
  std::priority_queue<Panel> heap;
  heap.push(gk15(f, a, b));
  ++used;
  double total_val = heap.top().value;
  double total_err = heap.top().error;

  const double min_width = 16.0 * std::numeric_limits<double>::epsilon() *
                           std::max({std::abs(a), std::abs(b), 1.0});
  std::vector<Panel> frozen;

  while (total_err > std::max(abs_tol, rel_tol * std::abs(total_val)) && used < budget) {
    if (heap.empty()) break;
    Panel worst = heap.top();
    heap.pop();
    if (worst.b - worst.a < min_width) {
      frozen.push_back(worst);  // cannot refine further in double precision
      continue;
    }
    const double mid = 0.5 * (worst.a + worst.b);
    Panel left = gk15(f, worst.a, mid);
    Panel right = gk15(f, mid, worst.b);
    used += 2;
    total_val += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  return {total_val, total_err, used};
}

// Wynn epsilon extrapolation of a sequence of partial sums. Returns the
// highest usable even-column entry; `spread` reports the scatter of the
// last extrapolants as an error proxy.
inline double wynn_epsilon(std::span<const double> s, double* spread) {
  const std::size_t m = s.size();
  std::vector<double> prev(m + 1, 0.0);               // epsilon_{j-1} row
  std::vector<double> cur(s.begin(), s.end());        // epsilon_j row
  double best = cur.back();
  double prev_best = best;
  *spread = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j < m; ++j) {
    std::vector<double> next(m - j);
    for (std::size_t i = 0; i + j < m; ++i) {
      const double diff = cur[i + 1] - cur[i];
      if (std::abs(diff) < 1e-305 || !std::isfinite(diff)) {
        next[i] = std::numeric_limits<double>::infinity();
      } else {
        next[i] = prev[i + 1] + 1.0 / diff;
      }
    }
    prev.assign(cur.begin(), cur.end());
    cur = std::move(next);
    if (j % 2 == 0 && !cur.empty() && std::isfinite(cur.back())) {
      prev_best = best;
      best = cur.back();
      *spread = std::abs(best - prev_best);
    }
  }
  return best;
}

// Integrate toward a flagged singular endpoint: geometric grading with
// ratio 1/2 plus epsilon extrapolation of the partial sums, which resolves
// integrable power (and power-log) singularities to near machine accuracy.
// [a, b] with the singularity at `b` if `at_right`, else at `a`.
template <class F>
QuadResult graded(F&& f, double a, double b, bool at_right, double abs_tol, double rel_tol,
                  std::size_t budget, std::size_t& used) {
  constexpr int kMaxLevels = 48;
  constexpr std::size_t kWindow = 12;  // partial sums fed to extrapolation
  const double w = b - a;

  std::vector<double> psums, pvals;
  double sum = 0.0, panel_err = 0.0;
  double est1 = 0.0, est2 = 0.0;  // last two extrapolants
  int n_est = 0;

  for (int k = 0; k < kMaxLevels; ++k) {
    const double lo_off = w * std::ldexp(1.0, -(k + 1));
    const double hi_off = w * std::ldexp(1.0, -k);
    double pa, pb;
    if (at_right) {
      pa = b - hi_off;
      pb = b - lo_off;
    } else {
      pa = a + lo_off;
      pb = a + hi_off;
    }
    if (!(pa < pb)) break;  // width underflow near the endpoint
    QuadResult piece = adapt(f, pa, pb, abs_tol / 64.0, rel_tol, budget, used);
    sum += piece.value;
    panel_err += piece.error;
    pvals.push_back(piece.value);
    psums.push_back(sum);

    const double target = std::max(abs_tol, rel_tol * std::abs(sum));

    // Tail already negligible without extrapolation.
    if (k >= 2 && std::abs(pvals[k]) <= 0.05 * target && std::abs(pvals[k - 1]) <= 0.05 * target)
      return {sum, panel_err + 4.0 * std::abs(pvals[k]), used};

    // Extrapolation is trusted only while the panel values decay; a
    // non-summable tail would otherwise be assigned its Shanks anti-limit.
    const bool decaying = k >= 4 && std::abs(pvals[k]) <= 0.9 * std::abs(pvals[k - 4]);
    if (decaying) {
      const std::size_t lo = psums.size() > kWindow ? psums.size() - kWindow : 0;
      double spread = 0.0;
      const double est =
          wynn_epsilon(std::span<const double>(psums).subspan(lo), &spread);
      if (std::isfinite(est)) {
        est2 = est1;
        est1 = est;
        ++n_est;
        if (n_est >= 2) {
          const double err_est = spread + std::abs(est1 - est2) +
                                 64.0 * std::numeric_limits<double>::epsilon() * std::abs(est);
          if (err_est <= 0.5 * std::max(abs_tol, rel_tol * std::abs(est)))
            return {est, panel_err + err_est, used};
        }
      }
    }
    if (used >= budget) break;
  }

  // Levels exhausted. A panel sequence that never enters sustained decay
  // signals a non-integrable singularity. The deepest level or two can be
  // corrupted by the representability limit next to the endpoint, so the
  // trend is judged on the bulk of the sequence.
  const std::size_t m = pvals.size();
  if (m >= 8) {
    std::size_t hi = m - 2;  // drop the deepest level
    double peak = 0.0;
    for (std::size_t i = hi > 8 ? hi - 8 : 0; i < hi; ++i) peak = std::max(peak, std::abs(pvals[i]));
    std::size_t grew = 0, cnt = 0;
    for (std::size_t i = hi > 8 ? hi - 8 : 1; i < hi; ++i) {
      if (pvals[i - 1] != 0.0) {
        ++cnt;
        if (std::abs(pvals[i] / pvals[i - 1]) >= 0.999) ++grew;
      }
    }
    if (cnt >= 4 && grew * 2 >= cnt && peak > std::max(abs_tol, rel_tol * std::abs(sum)))
      throw DivergentIntegral("integral diverges at flagged singular endpoint", sum);
  }
  if (n_est >= 2) {
    const double err_est = std::abs(est1 - est2) + std::abs(est1 - sum) * 1e-3;
    return {est1, panel_err + err_est, used};
  }
  return {sum, panel_err + (m ? std::abs(pvals.back()) : 0.0), used};
}

}  // namespace detail

/// Integrate g over [a, b]. Singular endpoints must be flagged in cfg.
/// Throws ToleranceNotMet (carrying the best estimate), InvalidIntegrand,
/// or DivergentIntegral.
template <class F>
QuadResult integrate(F&& g, double a, double b, const QuadratureConfig& cfg = {}) {
  if (!(cfg.rel_tol > 0) || !(cfg.abs_tol > 0) || cfg.max_subdivisions < 1)
    throw ConfigError("quadrature config: tolerances must be positive, max_subdivisions >= 1");
  if (a == b) return {0.0, 0.0, 0};
  if (!(a < b)) throw ConfigError("quadrature: interval must satisfy a < b");

  std::size_t used = 0;
  QuadResult total{};
  auto accumulate = [&](const QuadResult& piece) {
    total.value += piece.value;
    total.error += piece.error;
  };

  if (!cfg.singular_left && !cfg.singular_right) {
    accumulate(detail::adapt(g, a, b, cfg.abs_tol, cfg.rel_tol, cfg.max_subdivisions, used));
  } else if (cfg.singular_left && cfg.singular_right) {
    const double mid = 0.5 * (a + b);
    accumulate(detail::graded(g, a, mid, /*at_right=*/false, 0.5 * cfg.abs_tol, cfg.rel_tol,
                              cfg.max_subdivisions, used));
    accumulate(detail::graded(g, mid, b, /*at_right=*/true, 0.5 * cfg.abs_tol, cfg.rel_tol,
                              cfg.max_subdivisions, used));
  } else {
    accumulate(detail::graded(g, a, b, cfg.singular_right, cfg.abs_tol, cfg.rel_tol,
                              cfg.max_subdivisions, used));
  }
  total.panels = used;

  if (total.error > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total.value)))
    throw ToleranceNotMet("quadrature tolerance not met", total.value, total.error);
  return total;
}

/// Integrate g(r) * r^{n-1} over [a, b] (the radial volume weight in R^n).
template <class F>
QuadResult integrate_weighted(F&& g, double a, double b, int n, const QuadratureConfig& cfg = {}) {
  if (n < 2) throw ConfigError("integrate_weighted: dimension must be >= 2");
  return integrate([&g, n](double r) { return g(r) * std::pow(r, n - 1); }, a, b, cfg);
}

/// Integrate over [a, b] split at interior breakpoints (non-smooth radii)
/// and at interior singular radii; the sub-interval endpoints touching a
/// singular radius are integrated with the graded scheme.
template <class F>
QuadResult integrate_segmented(F&& g, double a, double b, const QuadratureConfig& cfg,
                               std::span<const double> breaks,
                               std::span<const double> singular = {}) {
  if (a == b) return {0.0, 0.0, 0};
  if (!(a < b)) throw ConfigError("quadrature: interval must satisfy a < b");

  std::vector<double> cuts{a, b};
  for (double x : breaks)
    if (x > a && x < b) cuts.push_back(x);
  for (double x : singular)
    if (x > a && x < b) cuts.push_back(x);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto is_singular = [&](double x) {
    for (double s : singular)
      if (x == s) return true;
    return false;
  };

  QuadResult total{};
  const std::size_t pieces = cuts.size() - 1;
  QuadratureConfig piece_cfg = cfg;
  piece_cfg.abs_tol = cfg.abs_tol / static_cast<double>(pieces);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    piece_cfg.singular_left = (i == 0 ? cfg.singular_left : is_singular(cuts[i]));
    piece_cfg.singular_right = (i + 2 == cuts.size() ? cfg.singular_right : is_singular(cuts[i + 1]));
    QuadResult piece = integrate(g, cuts[i], cuts[i + 1], piece_cfg);
    total.value += piece.value;
    total.error += piece.error;
    total.panels += piece.panels;
  }
  return total;
}

}  // namespace jaclab
