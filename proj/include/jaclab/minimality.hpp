#pragma once

// Quasiminimality diagnostics on the annulus A(R, 1).
//
// Competitor maps live on a polar grid: directions on the unit sphere
// (uniform angles for n = 2, a Fibonacci lattice for n >= 3) times radii in
// [R, 1]. For the perturbation family the radial solution's annulus
// q-energy is a lower bound, up to C(n,q), for the energy of any solution
// with the same data; the chain behind that bound is evaluated here piece
// by piece: per-ray radial variation, the threshold partition of the
// directions, the mean-value (Hoelder) step, the Markov step, the
// first-moment inequality with its 1/(4 n^2) factor, and the area-formula
// bookkeeping via target-space binning.
//
// Exact-Jacobian competitors are the n = 2 twist family
//   v(r, phi) = rho_{gamma,R}(r) e(phi + h(r)),
// whose r-dependent rotation adds |rho h'|^2 to the radial derivative but
// leaves the Jacobian untouched. For n >= 3 no closed-form non-radial
// exact-Jacobian family is available; such maps are only accepted as
// "inexact competitor" reports gated on the discrete Jacobian residual.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "jaclab/errors.hpp"
#include "jaclab/geometry.hpp"
#include "jaclab/perturbation.hpp"
#include "jaclab/quadrature.hpp"
#include "jaclab/radial.hpp"

namespace jaclab {

enum class BoundaryCondition {
  kIdentity,  // v = id on the outer sphere
  kSphere,    // |v| = 1 on the outer sphere (weakened condition)
};

class AnnulusMap {
 public:
  /// directions: num_rays x n unit vectors (flattened); values: one point
  /// per (ray, radius) node, ray-major (flattened).
  AnnulusMap(int n, double R, std::vector<double> directions, std::vector<double> radii,
             std::vector<double> values, BoundaryCondition bc = BoundaryCondition::kIdentity)
      : n_(n), R_(R), dirs_(std::move(directions)), radii_(std::move(radii)),
        values_(std::move(values)), bc_(bc) {
    if (n_ < 2) throw ConfigError("annulus map: dimension must be >= 2");
    if (!(R_ > 0.0 && R_ < 1.0)) throw ConfigError("annulus map: R must lie in (0,1)");
    if (dirs_.empty() || dirs_.size() % n_ != 0)
      throw ConfigError("annulus map: directions must be num_rays x n");
    if (radii_.size() < 2) throw ConfigError("annulus map: need at least 2 radii per ray");
    for (std::size_t j = 0; j + 1 < radii_.size(); ++j)
      if (!(radii_[j] < radii_[j + 1])) throw ConfigError("annulus map: radii must increase");
    if (std::abs(radii_.front() - R_) > 1e-12 || std::abs(radii_.back() - 1.0) > 1e-12)
      throw ConfigError("annulus map: radii must span [R, 1]");
    if (values_.size() != num_rays() * num_radii() * n_)
      throw ConfigError("annulus map: values size mismatch");
    for (std::size_t i = 0; i < num_rays(); ++i) {
      double s = 0.0;
      for (int k = 0; k < n_; ++k) s += dir(i, k) * dir(i, k);
      if (std::abs(s - 1.0) > 1e-9) throw ConfigError("annulus map: directions must be unit vectors");
    }
  }

  int dim() const { return n_; }
  double inner_radius() const { return R_; }
  std::size_t num_rays() const { return dirs_.size() / n_; }
  std::size_t num_radii() const { return radii_.size(); }
  const std::vector<double>& radii() const { return radii_; }
  const std::vector<double>& raw_directions() const { return dirs_; }
  const std::vector<double>& raw_values() const { return values_; }
  BoundaryCondition boundary_condition() const { return bc_; }

  double dir(std::size_t i, int k) const { return dirs_[i * n_ + k]; }
  double value(std::size_t i, std::size_t j, int k) const {
    return values_[(i * num_radii() + j) * n_ + k];
  }

  /// |v| at a node.
  double point_norm(std::size_t i, std::size_t j) const {
    double s = 0.0;
    for (int k = 0; k < n_; ++k) s += value(i, j, k) * value(i, j, k);
    return std::sqrt(s);
  }

  /// Per-direction indicator that the outer-sphere node lands on S^{n-1}.
  std::vector<bool> boundary_on_sphere(double tol = 1e-9) const {
    std::vector<bool> flags(num_rays());
    for (std::size_t i = 0; i < num_rays(); ++i)
      flags[i] = std::abs(point_norm(i, num_radii() - 1) - 1.0) <= tol;
    return flags;
  }

  /// Per-direction indicator that v equals the identity on the outer sphere.
  std::vector<bool> boundary_identity(double tol = 1e-9) const {
    std::vector<bool> flags(num_rays());
    for (std::size_t i = 0; i < num_rays(); ++i) {
      double d = 0.0;
      for (int k = 0; k < n_; ++k) d = std::max(d, std::abs(value(i, num_radii() - 1, k) - dir(i, k)));
      flags[i] = d <= tol;
    }
    return flags;
  }

  /// |d_r v| per node by centered differences along each ray (one-sided at
  /// the ray endpoints); NaN marks a corrupted node.
  std::vector<double> radial_derivative_grid() const {
    const std::size_t nr = num_radii(), nth = num_rays();
    std::vector<double> out(nth * nr);
    for (std::size_t i = 0; i < nth; ++i) {
      for (std::size_t j = 0; j < nr; ++j) {
        const std::size_t jm = j == 0 ? 0 : j - 1;
        const std::size_t jp = j + 1 == nr ? j : j + 1;
        const double dr = radii_[jp] - radii_[jm];
        double s = 0.0;
        for (int k = 0; k < n_; ++k) {
          const double d = (value(i, jp, k) - value(i, jm, k)) / dr;
          s += d * d;
        }
        out[i * nr + j] = std::sqrt(s);
      }
    }
    return out;
  }

 private:
  int n_;
  double R_;
  std::vector<double> dirs_;
  std::vector<double> radii_;
  std::vector<double> values_;
  BoundaryCondition bc_;
};

namespace detail {

inline std::vector<double> uniform_circle(std::size_t count) {
  std::vector<double> dirs(count * 2);
  for (std::size_t i = 0; i < count; ++i) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
    dirs[2 * i] = std::cos(th);
    dirs[2 * i + 1] = std::sin(th);
  }
  return dirs;
}

// Fibonacci lattice on S^2: low-discrepancy directions for n = 3.
inline std::vector<double> fibonacci_sphere(std::size_t count) {
  std::vector<double> dirs(count * 3);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double th = golden * static_cast<double>(i);
    dirs[3 * i] = rad * std::cos(th);
    dirs[3 * i + 1] = rad * std::sin(th);
    dirs[3 * i + 2] = z;
  }
  return dirs;
}

inline std::vector<double> uniform_radii(double R, std::size_t count) {
  std::vector<double> rs(count);
  for (std::size_t j = 0; j < count; ++j)
    rs[j] = R + (1.0 - R) * static_cast<double>(j) / static_cast<double>(count - 1);
  rs.back() = 1.0;
  return rs;
}

// Trapezoid rule over the per-ray radius grid.
inline double trapz(const std::vector<double>& radii, const double* vals) {
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < radii.size(); ++j)
    acc += 0.5 * (vals[j] + vals[j + 1]) * (radii[j + 1] - radii[j]);
  return acc;
}

}  // namespace detail

/// Sample a radial stretching onto the polar grid (any dimension).
inline AnnulusMap sample_radial_map(const RadialProfile& profile, int n, double R,
                                    std::size_t num_rays, std::size_t num_radii) {
  if (num_radii < 64) throw ConfigError("annulus map: need >= 64 radii per ray");
  std::vector<double> dirs = n == 2 ? detail::uniform_circle(num_rays)
                                    : detail::fibonacci_sphere(num_rays);
  if (n > 3) throw ConfigError("annulus map: dimensions above 3 are not supported");
  std::vector<double> radii = detail::uniform_radii(R, num_radii);
  std::vector<double> values(num_rays * num_radii * n);
  for (std::size_t i = 0; i < num_rays; ++i) {
    for (std::size_t j = 0; j < num_radii; ++j) {
      const double rho = profile.rho(radii[j]);
      for (int k = 0; k < n; ++k) values[(i * num_radii + j) * n + k] = rho * dirs[i * n + k];
    }
  }
  return AnnulusMap(n, R, std::move(dirs), std::move(radii), std::move(values));
}

struct TwistProfile {
  std::function<double(double)> h;   // rotation angle, absolutely continuous on [R,1]
  std::function<double(double)> dh;  // its derivative
};

/// Planar competitor v(r, phi) = rho_{gamma,R}(r) e(phi + h(r)): the
/// rotation leaves the Jacobian equal to the outer branch while the radial
/// derivative picks up |rho h'|^2. Identity boundary values force h(1) = 0;
/// the weakened sphere condition admits any h(1).
inline AnnulusMap twist_competitor(const PerturbationParams& prm, const TwistProfile& twist,
                                   std::size_t num_rays, std::size_t num_radii,
                                   BoundaryCondition bc = BoundaryCondition::kIdentity) {
  if (prm.n != 2) throw ConfigError("twist competitor: only n = 2 admits the rotation family");
  if (num_radii < 64) throw ConfigError("annulus map: need >= 64 radii per ray");
  if (bc == BoundaryCondition::kIdentity && std::abs(twist.h(1.0)) > 1e-12)
    throw ConfigError("boundary violation: twist profile must vanish at r = 1");

  auto prof = annulus_profile(prm);
  std::vector<double> dirs = detail::uniform_circle(num_rays);
  std::vector<double> radii = detail::uniform_radii(prm.R, num_radii);
  std::vector<double> values(num_rays * num_radii * 2);
  for (std::size_t i = 0; i < num_rays; ++i) {
    const double phi = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(num_rays);
    for (std::size_t j = 0; j < num_radii; ++j) {
      const double rho = prof.rho(radii[j]);
      const double ang = phi + twist.h(radii[j]);
      values[(i * num_radii + j) * 2] = rho * std::cos(ang);
      values[(i * num_radii + j) * 2 + 1] = rho * std::sin(ang);
    }
  }
  return AnnulusMap(2, prm.R, std::move(dirs), std::move(radii), std::move(values), bc);
}

/// Seeded twist with h(1) = 0: a linear ramp plus three sine modes, scaled
/// so |h'| stays of order `amplitude`.
inline TwistProfile random_twist(const PerturbationParams& prm, std::mt19937& rng,
                                 double amplitude = 0.5) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double R = prm.R;
  const double a = amplitude * u(rng);
  std::vector<double> b(3);
  for (auto& bk : b) bk = amplitude * u(rng);
  const double span = 1.0 - R;
  auto h = [a, b, R, span](double r) {
    double acc = a * (1.0 - r);
    for (std::size_t k = 0; k < b.size(); ++k) {
      const double freq = (k + 1) * std::numbers::pi / span;
      acc += b[k] * span / ((k + 1) * std::numbers::pi) * std::sin(freq * (1.0 - r));
    }
    return acc;
  };
  auto dh = [a, b, R, span](double r) {
    double acc = -a;
    for (std::size_t k = 0; k < b.size(); ++k) {
      const double freq = (k + 1) * std::numbers::pi / span;
      acc -= b[k] * std::cos(freq * (1.0 - r));
    }
    return acc;
  };
  return {h, dh};
}

/// Per-ray total radial variation integral_R^1 |d_r v| dr by the trapezoid
/// rule; rays with non-finite nodes are excluded (NaN entries).
inline std::vector<double> ray_variation(const AnnulusMap& v) {
  const std::size_t nth = v.num_rays(), nr = v.num_radii();
  const std::vector<double> grid = v.radial_derivative_grid();
  std::vector<double> out(nth, std::numeric_limits<double>::quiet_NaN());
  std::size_t admissible = 0;
  for (std::size_t i = 0; i < nth; ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < nr; ++j)
      if (!std::isfinite(grid[i * nr + j])) ok = false;
    if (!ok) continue;
    out[i] = detail::trapz(v.radii(), &grid[i * nr]);
    ++admissible;
  }
  if (admissible == 0) throw NumericError("no admissible rays");
  return out;
}

struct ThetaPartition {
  double lambda = 0.0;
  std::vector<std::size_t> theta1;  // variation <= lambda
  std::vector<std::size_t> theta2;  // variation > lambda
  std::vector<double> variation;    // per ray (NaN = inadmissible)
  std::size_t inadmissible = 0;
};

/// Threshold lambda = (1 - gamma^n R^n) / (2n), the choice that balances
/// the shell-containment and Markov estimates.
inline double partition_threshold(const PerturbationParams& prm) {
  return (1.0 - std::pow(prm.gamma * prm.R, prm.n)) / (2.0 * prm.n);
}

inline ThetaPartition partition(const AnnulusMap& v, const PerturbationParams& prm) {
  ThetaPartition part;
  part.lambda = partition_threshold(prm);
  part.variation = ray_variation(v);
  for (std::size_t i = 0; i < part.variation.size(); ++i) {
    if (!std::isfinite(part.variation[i])) {
      ++part.inadmissible;
    } else if (part.variation[i] <= part.lambda) {
      part.theta1.push_back(i);
    } else {
      part.theta2.push_back(i);
    }
  }
  return part;
}

struct QuasiminReport {
  double q = 0.0;
  double lambda = 0.0;
  double lhs_energy = 0.0;      // exact radial annulus q-energy
  double rhs_energy = 0.0;      // discrete competitor q-energy (radial part)
  double energy_ratio = 0.0;    // rhs / lhs
  double holder_lhs = 0.0;      // 2^{n-1} avg avg |d_r v|^q r^{n-1}
  double holder_rhs = 0.0;      // (avg avg |d_r v|)^q
  double markov_lhs = 0.0;      // H^{n-1}(Theta_2) * lambda
  double markov_rhs = 0.0;      // integral integral |d_r v| dr dtheta
  double first_moment_lhs = 0.0;     // integral integral |d_r v| dr dtheta
  double first_moment_rhs = 0.0;     // (1/(4 n^2)) integral integral |d_r u| dr dtheta
  double first_moment_margin = 0.0;  // lhs - rhs
  double jacobian_residual = std::numeric_limits<double>::quiet_NaN();
  bool jacobian_residual_available = false;
  bool exact_competitor = false;  // residual below the gate
  double residual_gate = 0.0;
  bool boundary_ok = false;
  std::string boundary_mode;
  // The annulus is the domain actually controlled by the chain; interior
  // admissibility of a discrete competitor on the full ball is not
  // decidable at grid scale.
  std::string domain_note = "diagnostics cover A(R,1) only";
};

namespace detail {

// Relative residual of the discrete polar Jacobian against the outer
// branch; requires the full uniform circle (n = 2).
inline double discrete_jacobian_residual(const AnnulusMap& v, const PerturbationParams& prm) {
  const std::size_t nth = v.num_rays(), nr = v.num_radii();
  const double dtheta = 2.0 * std::numbers::pi / static_cast<double>(nth);
  double worst = 0.0;
  for (std::size_t i = 0; i < nth; ++i) {
    const std::size_t ip = (i + 1) % nth;
    const std::size_t im = (i + nth - 1) % nth;
    for (std::size_t j = 1; j + 1 < nr; ++j) {
      const double r = v.radii()[j];
      const double drad = v.radii()[j + 1] - v.radii()[j - 1];
      const double drx = (v.value(i, j + 1, 0) - v.value(i, j - 1, 0)) / drad;
      const double dry = (v.value(i, j + 1, 1) - v.value(i, j - 1, 1)) / drad;
      const double dtx = (v.value(ip, j, 0) - v.value(im, j, 0)) / (2.0 * dtheta);
      const double dty = (v.value(ip, j, 1) - v.value(im, j, 1)) / (2.0 * dtheta);
      const double jac = (drx * dty - dry * dtx) / r;
      const double want = prm.outer_branch(r);
      worst = std::max(worst, std::abs(jac - want) / want);
    }
  }
  return worst;
}

inline bool is_uniform_circle(const AnnulusMap& v) {
  if (v.dim() != 2) return false;
  const std::size_t nth = v.num_rays();
  for (std::size_t i = 0; i < nth; ++i) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(nth);
    if (std::abs(v.dir(i, 0) - std::cos(th)) > 1e-9 || std::abs(v.dir(i, 1) - std::sin(th)) > 1e-9)
      return false;
  }
  return true;
}

}  // namespace detail

/// Evaluate both sides of the quasiminimality inequality and every link of
/// its proof chain for a discrete competitor. The constant C(n,q) is never
/// asserted; the report carries the raw sides and margins.
inline QuasiminReport quasimin_ratio(const AnnulusMap& v, const PerturbationParams& prm, double q,
                                     const QuadratureConfig& /*cfg*/ = {},
                                     double residual_gate = 1e-2) {
  if (v.dim() != prm.n) throw ConfigError("quasimin: dimension mismatch");
  if (std::abs(v.inner_radius() - prm.R) > 1e-12) throw ConfigError("quasimin: R mismatch");
  const int n = prm.n;
  const std::size_t nth = v.num_rays(), nr = v.num_radii();
  const double sphere = unit_sphere_area(n);
  const double wtheta = sphere / static_cast<double>(nth);

  QuasiminReport rep;
  rep.q = q;
  rep.lambda = partition_threshold(prm);
  rep.residual_gate = residual_gate;

  // Discrete q-energy of the radial derivative and the first moments.
  const std::vector<double> grid = v.radial_derivative_grid();
  std::vector<double> powq(nth * nr), plain(nth * nr);
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    const double r = v.radii()[idx % nr];
    const double w = std::pow(r, n - 1);
    powq[idx] = std::pow(grid[idx], q) * w;
    plain[idx] = grid[idx];
  }
  double rhs = 0.0, moment = 0.0;
  std::size_t admissible = 0;
  for (std::size_t i = 0; i < nth; ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < nr; ++j)
      if (!std::isfinite(grid[i * nr + j])) ok = false;
    if (!ok) continue;
    ++admissible;
    rhs += wtheta * detail::trapz(v.radii(), &powq[i * nr]);
    moment += wtheta * detail::trapz(v.radii(), &plain[i * nr]);
  }
  if (admissible == 0) throw NumericError("no admissible rays");

  // Exact radial annulus energy at the requested exponent.
  rep.lhs_energy = unit_ball_volume(n) * std::pow(prm.M, q) * (1.0 - std::pow(prm.R, n));
  rep.rhs_energy = rhs;
  rep.energy_ratio = rhs / rep.lhs_energy;

  const double span = 1.0 - prm.R;
  rep.holder_lhs = std::pow(2.0, n - 1) * rhs / (sphere * span);
  rep.holder_rhs = std::pow(moment / (sphere * span), q);

  // Markov step: H^{n-1}(Theta_2) * lambda <= total first moment.
  const ThetaPartition part = partition(v, prm);
  rep.markov_lhs = static_cast<double>(part.theta2.size()) * wtheta * rep.lambda;
  rep.markov_rhs = moment;

  rep.first_moment_lhs = moment;
  rep.first_moment_rhs = sphere * prm.one_minus_gamma_R() / (4.0 * n * n);
  rep.first_moment_margin = rep.first_moment_lhs - rep.first_moment_rhs;

  if (detail::is_uniform_circle(v)) {
    rep.jacobian_residual = detail::discrete_jacobian_residual(v, prm);
    rep.jacobian_residual_available = true;
    rep.exact_competitor = rep.jacobian_residual <= residual_gate;
  } else {
    // Scattered directions (n >= 3) carry no neighbor structure for a
    // discrete Jacobian; such maps stay "inexact competitor".
    rep.jacobian_residual_available = false;
    rep.exact_competitor = false;
  }

  if (v.boundary_condition() == BoundaryCondition::kIdentity) {
    rep.boundary_mode = "identity";
    const auto flags = v.boundary_identity(1e-9);
    rep.boundary_ok = std::all_of(flags.begin(), flags.end(), [](bool b) { return b; });
  } else {
    rep.boundary_mode = "sphere";
    const auto flags = v.boundary_on_sphere(1e-9);
    rep.boundary_ok = std::all_of(flags.begin(), flags.end(), [](bool b) { return b; });
  }
  return rep;
}

struct ImageAccounting {
  // (a) shell containment of Theta_1 ray images in A[1 - lambda, 1]:
  // the largest positive excursion of (1 - lambda) - |v| over Theta_1.
  double shell_max_deviation = 0.0;
  std::size_t theta1_count = 0;

  // (b) tube-mass identity at grid scale.
  double binned_volume = 0.0;
  double source_mass = 0.0;  // integral over A(R,1) of the outer branch
  double volume_rel_error = 0.0;
  std::vector<double> sector_binned;
  std::vector<double> sector_mass;
  double sector_max_rel_error = 0.0;
  int max_bin_multiplicity = 0;  // distinct sectors hitting one cell

  // (c) Markov step in volume form.
  double markov_lhs = 0.0;  // H^{n-1}(Theta_2) (1 - (gamma R)^n)/n
  double markov_rhs = 0.0;  // lambda^{-1} (1 - (gamma R)^n)/n * first moment
  bool markov_ok = false;

  std::size_t bins_per_axis = 0;
  double refined_shift = 0.0;  // relative change when halving the resolution
  bool resolution_warning = false;
};

namespace detail {

struct BinGrid {
  std::size_t K;
  double h;
  std::vector<std::uint16_t> mask;  // one bit per sector group (<= 16)

  explicit BinGrid(std::size_t bins)
      : K(bins), h(2.0 / static_cast<double>(bins)), mask(bins * bins, 0) {}

  void mark(double x, double y, std::uint16_t sector) {
    const auto ix = static_cast<std::size_t>(std::clamp((x + 1.0) / h, 0.0, static_cast<double>(K - 1)));
    const auto iy = static_cast<std::size_t>(std::clamp((y + 1.0) / h, 0.0, static_cast<double>(K - 1)));
    mask[ix * K + iy] |= static_cast<std::uint16_t>(1u << sector);
  }
};

// Supersampled rasterization of the quad grid of a planar annulus map into
// the bin grid; sampling density adapts to the image-space quad edges.
inline void rasterize_quads(const AnnulusMap& v, std::size_t sectors, BinGrid& grid) {
  const std::size_t nth = v.num_rays(), nr = v.num_radii();
  for (std::size_t i = 0; i < nth; ++i) {
    const std::size_t ip = (i + 1) % nth;
    const auto sector = static_cast<std::uint16_t>(i * sectors / nth);
    for (std::size_t j = 0; j + 1 < nr; ++j) {
      const double ax = v.value(i, j, 0), ay = v.value(i, j, 1);
      const double bx = v.value(ip, j, 0), by = v.value(ip, j, 1);
      const double cx = v.value(i, j + 1, 0), cy = v.value(i, j + 1, 1);
      const double dx = v.value(ip, j + 1, 0), dy = v.value(ip, j + 1, 1);
      if (!std::isfinite(ax + ay + bx + by + cx + cy + dx + dy)) continue;
      const double e1 = std::hypot(bx - ax, by - ay);
      const double e2 = std::hypot(cx - ax, cy - ay);
      const auto st = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(e1 / grid.h)) + 1, 2, 64);
      const auto sr = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(e2 / grid.h)) + 1, 2, 64);
      for (std::size_t a = 0; a < st; ++a) {
        const double s = static_cast<double>(a) / static_cast<double>(st - 1);
        for (std::size_t b2 = 0; b2 < sr; ++b2) {
          const double t = static_cast<double>(b2) / static_cast<double>(sr - 1);
          const double x = (1 - s) * (1 - t) * ax + s * (1 - t) * bx + (1 - s) * t * cx + s * t * dx;
          const double y = (1 - s) * (1 - t) * ay + s * (1 - t) * by + (1 - s) * t * cy + s * t * dy;
          grid.mark(x, y, sector);
        }
      }
    }
  }
}

}  // namespace detail

/// Area-formula bookkeeping for a planar competitor: shell containment of
/// the low-variation rays, the binned image volume against the source-side
/// mass (whole annulus and per sector group), and the Markov rearrangement.
inline ImageAccounting image_accounting(const AnnulusMap& v, const ThetaPartition& part,
                                        const PerturbationParams& prm,
                                        const QuadratureConfig& cfg = {},
                                        std::size_t bins_per_axis = 512, std::size_t sectors = 16) {
  if (v.dim() != 2)
    throw ConfigError("image accounting: target-space binning is implemented for n = 2");
  if (bins_per_axis * bins_per_axis > (std::size_t{1} << 24))
    throw ConfigError("image accounting: bin count exceeds the 2^24 cap");
  if (sectors < 1 || sectors > 16) throw ConfigError("image accounting: sectors must be in [1, 16]");
  const std::size_t nth = v.num_rays(), nr = v.num_radii();
  const int n = v.dim();

  ImageAccounting rep;
  rep.bins_per_axis = bins_per_axis;
  rep.theta1_count = part.theta1.size();

  // (a) every Theta_1 ray image must sit in the shell A[1 - lambda, 1].
  for (std::size_t i : part.theta1) {
    for (std::size_t j = 0; j < nr; ++j) {
      const double excursion = (1.0 - part.lambda) - v.point_norm(i, j);
      rep.shell_max_deviation = std::max(rep.shell_max_deviation, excursion);
    }
  }

  // (b) binned image volume vs source mass.
  detail::BinGrid grid(bins_per_axis);
  detail::rasterize_quads(v, sectors, grid);
  std::vector<std::size_t> sector_cells(sectors, 0);
  std::size_t occupied = 0;
  for (const std::uint16_t m : grid.mask) {
    if (m != 0) {
      ++occupied;
      rep.max_bin_multiplicity = std::max(rep.max_bin_multiplicity, std::popcount(m));
      for (std::size_t s = 0; s < sectors; ++s)
        if (m & (1u << s)) ++sector_cells[s];
    }
  }
  rep.binned_volume = static_cast<double>(occupied) * grid.h * grid.h;
  rep.source_mass = unit_sphere_area(n) * annulus_mass(prm, cfg);
  rep.volume_rel_error = (rep.binned_volume - rep.source_mass) / rep.source_mass;

  rep.sector_binned.resize(sectors);
  rep.sector_mass.resize(sectors);
  for (std::size_t s = 0; s < sectors; ++s) {
    rep.sector_binned[s] = static_cast<double>(sector_cells[s]) * grid.h * grid.h;
    std::size_t count = 0;
    for (std::size_t i = 0; i < nth; ++i)
      if (i * sectors / nth == s) ++count;
    rep.sector_mass[s] = rep.source_mass * static_cast<double>(count) / static_cast<double>(nth);
    rep.sector_max_rel_error = std::max(
        rep.sector_max_rel_error, std::abs(rep.sector_binned[s] - rep.sector_mass[s]) / rep.sector_mass[s]);
  }

  // Resolution stability: redo the union volume at half resolution.
  {
    detail::BinGrid coarse(bins_per_axis / 2);
    detail::rasterize_quads(v, sectors, coarse);
    std::size_t occ = 0;
    for (auto m : coarse.mask)
      if (m != 0) ++occ;
    const double vol2 = static_cast<double>(occ) * coarse.h * coarse.h;
    rep.refined_shift = std::abs(rep.binned_volume - vol2) / rep.binned_volume;
    rep.resolution_warning = rep.refined_shift > 0.10;
  }

  // (c) Markov in volume form.
  const double wtheta = unit_sphere_area(n) / static_cast<double>(nth);
  const double shell_mass = (1.0 - std::pow(prm.gamma * prm.R, n)) / n;
  double moment = 0.0;
  for (std::size_t i = 0; i < nth; ++i)
    if (std::isfinite(part.variation[i])) moment += wtheta * part.variation[i];
  rep.markov_lhs = static_cast<double>(part.theta2.size()) * wtheta * shell_mass;
  rep.markov_rhs = shell_mass / part.lambda * moment;
  rep.markov_ok = rep.markov_lhs <= rep.markov_rhs * (1.0 + 1e-12);

  return rep;
}

}  // namespace jaclab
