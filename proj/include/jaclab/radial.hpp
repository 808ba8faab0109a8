#pragma once

// Radial data on the unit ball and the radial stretchings they generate.
//
// A radial density f(r) >= 0 with unit mean and a positive lower bound
// determines a unique spherically symmetric map u(x) = rho(|x|) x/|x| with
// det Du = f; the profile solves rho^n(r) = integral_0^r n f(s) s^{n-1} ds.
// This header builds that profile and evaluates the pointwise quantities of
// the map: Jacobian, operator norm of Du, radial derivative, p-energies,
// and image volumes.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "jaclab/errors.hpp"
#include "jaclab/geometry.hpp"
#include "jaclab/interpolation.hpp"
#include "jaclab/quadrature.hpp"

namespace jaclab {

class RadialDensity {
 public:
  using Eval = std::function<double(double)>;

  static RadialDensity constant(int n, double value) {
    check_dim(n);
    if (value < 0) throw ConfigError("constant density: value must be >= 0");
    RadialDensity f(n, "constant", [value](double) { return value; });
    f.lower_bound_ = value;
    f.params_ = {value};
    return f;
  }

  /// f(r) = a + b r.
  static RadialDensity affine(int n, double a, double b) {
    check_dim(n);
    RadialDensity f(n, "affine", [a, b](double r) { return a + b * r; });
    f.lower_bound_ = std::min(a, a + b);
    if (f.lower_bound_ < 0) throw ConfigError("affine density: negative on [0,1]");
    f.params_ = {a, b};
    return f;
  }

  /// f(r) = coeff * r^exponent with exponent >= 0.
  static RadialDensity power(int n, double coeff, double exponent) {
    check_dim(n);
    if (coeff < 0 || exponent < 0) throw ConfigError("power density: need coeff >= 0, exponent >= 0");
    RadialDensity f(n, "power", [coeff, exponent](double r) { return coeff * std::pow(r, exponent); });
    f.lower_bound_ = exponent == 0 ? coeff : 0.0;
    f.params_ = {coeff, exponent};
    return f;
  }

  /// Piecewise constant: interior breakpoints (sorted, in (0,1)) and one
  /// value per piece (breaks.size() + 1 values).
  static RadialDensity piecewise_constant(int n, std::vector<double> breaks, std::vector<double> values) {
    check_dim(n);
    if (values.size() != breaks.size() + 1)
      throw ConfigError("piecewise density: need breaks.size()+1 values");
    for (std::size_t i = 0; i < breaks.size(); ++i) {
      if (breaks[i] <= 0.0 || breaks[i] >= 1.0 || (i > 0 && breaks[i] <= breaks[i - 1]))
        throw ConfigError("piecewise density: breakpoints must be strictly increasing in (0,1)");
    }
    double lb = values[0];
    for (double v : values) {
      if (v < 0) throw ConfigError("piecewise density: negative value");
      lb = std::min(lb, v);
    }
    auto bks = std::make_shared<std::vector<double>>(breaks);
    auto vals = std::make_shared<std::vector<double>>(values);
    RadialDensity f(n, "piecewise", [bks, vals](double r) {
      const auto it = std::upper_bound(bks->begin(), bks->end(), r);
      return (*vals)[static_cast<std::size_t>(it - bks->begin())];
    });
    f.lower_bound_ = lb;
    f.breaks_ = std::move(breaks);
    f.params_ = values;
    return f;
  }

  /// Sampled table interpolated by monotone piecewise cubics.
  static RadialDensity table(int n, std::vector<double> r, std::vector<double> v) {
    check_dim(n);
    double lb = std::numeric_limits<double>::infinity();
    for (double y : v) {
      if (y < 0) throw ConfigError("table density: negative sample");
      lb = std::min(lb, y);
    }
    auto interp = std::make_shared<PchipInterpolant>(std::move(r), std::move(v));
    RadialDensity f(n, "table", [interp](double s) { return std::max(0.0, (*interp)(s)); });
    f.lower_bound_ = lb;
    f.breaks_.assign(interp->knots().begin() + 1, interp->knots().end() - 1);
    f.table_ = interp;
    return f;
  }

  /// f(r) = c + kappa * |r - r0|^exponent on |r - r0| < width, else c.
  /// With exponent in (-1, 0) this lies in L^p iff p * |exponent| < 1.
  static RadialDensity singular_power(int n, double c, double kappa, double r0, double exponent,
                                      double width) {
    check_dim(n);
    if (c < 0 || kappa < 0 || width <= 0 || r0 - width < 0 || r0 + width > 1)
      throw ConfigError("singular density: need c,kappa >= 0 and [r0-w, r0+w] inside (0,1)");
    if (exponent > 0) throw ConfigError("singular density: exponent must be <= 0");
    RadialDensity f(n, "singular_power", [c, kappa, r0, exponent, width](double r) {
      const double d = std::abs(r - r0);
      if (d >= width) return c;
      return c + kappa * (exponent == 0.0 ? 1.0 : std::pow(d, exponent));
    });
    f.lower_bound_ = c;
    f.breaks_ = {r0 - width, r0 + width};
    if (exponent < 0) f.singular_ = {r0};
    f.params_ = {c, kappa, r0, exponent, width};
    return f;
  }

  /// Arbitrary evaluator; not serializable.
  static RadialDensity custom(int n, Eval eval, double lower_bound, std::vector<double> breaks = {},
                              std::vector<double> singular = {}) {
    check_dim(n);
    RadialDensity f(n, "custom", std::move(eval));
    f.lower_bound_ = lower_bound;
    f.breaks_ = std::move(breaks);
    f.singular_ = std::move(singular);
    return f;
  }

  double operator()(double r) const { return eval_(r); }
  int dim() const { return n_; }
  double lower_bound() const { return lower_bound_; }
  const std::string& kind() const { return kind_; }
  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<double>& singular_radii() const { return singular_; }
  const std::vector<double>& params() const { return params_; }
  const PchipInterpolant* table_data() const { return table_.get(); }

  /// Mean over the unit ball: n * integral_0^1 f(r) r^{n-1} dr.
  double mean(const QuadratureConfig& cfg = {}) const {
    const int n = n_;
    auto w = [this, n](double r) { return eval_(r) * std::pow(r, n - 1); };
    return n_ * integrate_segmented(w, 0.0, 1.0, cfg, breaks_, singular_).value;
  }

  /// Copy scaled by t >= 0 (kind-preserving for serializable kinds).
  RadialDensity scaled(double t) const {
    if (t < 0) throw ConfigError("density scaling: factor must be >= 0");
    if (kind_ == "constant") return constant(n_, t * params_[0]);
    if (kind_ == "affine") return affine(n_, t * params_[0], t * params_[1]);
    if (kind_ == "power") return power(n_, t * params_[0], params_[1]);
    if (kind_ == "piecewise") {
      std::vector<double> vals = params_;
      for (double& v : vals) v *= t;
      return piecewise_constant(n_, breaks_, std::move(vals));
    }
    if (kind_ == "table") {
      std::vector<double> vals = table_->values();
      for (double& v : vals) v *= t;
      return table(n_, table_->knots(), std::move(vals));
    }
    if (kind_ == "singular_power")
      return singular_power(n_, t * params_[0], t * params_[1], params_[2], params_[3], params_[4]);
    Eval e = eval_;
    RadialDensity f(n_, kind_, [e, t](double r) { return t * e(r); });
    f.lower_bound_ = t * lower_bound_;
    f.breaks_ = breaks_;
    f.singular_ = singular_;
    return f;
  }

 private:
  RadialDensity(int n, std::string kind, Eval eval)
      : n_(n), kind_(std::move(kind)), eval_(std::move(eval)) {}

  static void check_dim(int n) {
    if (n < 2) throw ConfigError("density dimension must be >= 2");
  }

  int n_;
  std::string kind_;
  Eval eval_;
  double lower_bound_ = 0.0;
  std::vector<double> breaks_;    // interior non-smooth radii
  std::vector<double> singular_;  // interior blow-up radii
  std::vector<double> params_;
  std::shared_ptr<const PchipInterpolant> table_;
};

class RadialProfile {
 public:
  using Fn = std::function<double(double)>;

  static RadialProfile from_functions(int n, Fn rho, Fn rho_dot, double domain_lo = 0.0,
                                      std::vector<double> breaks = {}, std::string kind = "analytic",
                                      std::vector<double> params = {},
                                      std::vector<double> singular = {}) {
    if (n < 2) throw ConfigError("profile dimension must be >= 2");
    RadialProfile p;
    p.n_ = n;
    p.rho_ = std::move(rho);
    p.rho_dot_ = std::move(rho_dot);
    p.domain_lo_ = domain_lo;
    p.breaks_ = std::move(breaks);
    p.kind_ = std::move(kind);
    p.params_ = std::move(params);
    p.singular_ = std::move(singular);
    return p;
  }

  static RadialProfile identity(int n) {
    return from_functions(
        n, [](double r) { return r; }, [](double) { return 1.0; }, 0.0, {}, "identity");
  }

  /// rho(r) = r^exponent (exponent >= 1 keeps rho(0)=0 and rho_dot bounded).
  static RadialProfile power(int n, double exponent) {
    return from_functions(
        n, [exponent](double r) { return std::pow(r, exponent); },
        [exponent](double r) { return exponent * std::pow(r, exponent - 1.0); }, 0.0, {}, "power",
        {exponent});
  }

  double rho(double r) const { return rho_(r); }
  double rho_dot(double r) const { return rho_dot_(r); }
  int dim() const { return n_; }
  double domain_lo() const { return domain_lo_; }
  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<double>& singular_radii() const { return singular_; }
  const std::string& kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }

 private:
  int n_ = 2;
  Fn rho_, rho_dot_;
  double domain_lo_ = 0.0;
  std::vector<double> breaks_;
  std::vector<double> singular_;  // radii where rho_dot may blow up
  std::string kind_ = "analytic";
  std::vector<double> params_;
};

/// The radial stretching u(x) = rho(|x|) x/|x| carried by a profile.
struct StretchMap {
  RadialProfile profile;

  /// Apply to a point (n = profile dimension); fixes the origin.
  std::vector<double> operator()(std::vector<double> x) const {
    double r2 = 0;
    for (double c : x) r2 += c * c;
    const double r = std::sqrt(r2);
    if (r == 0.0) return x;
    const double s = profile.rho(r) / r;
    for (double& c : x) c *= s;
    return x;
  }
};

namespace detail {

inline void validate_nonnegative(const RadialDensity& f) {
  // Spot-check on a dense grid plus the midpoints of each piece.
  constexpr int kGrid = 512;
  for (int i = 1; i <= kGrid; ++i) {
    const double r = static_cast<double>(i) / kGrid;
    bool skip = false;
    for (double s : f.singular_radii())
      if (std::abs(r - s) < 1e-12) skip = true;
    if (!skip && f(r) < 0.0) throw ConfigError("invalid density: negative at r=" + std::to_string(r));
  }
}

}  // namespace detail

/// Solve det Du = f among radial stretchings:
/// rho(r) = (integral_0^r n f(s) s^{n-1} ds)^{1/n}, with rho_dot recovered
/// from the exact identity rho_dot = r^{n-1} f(r) / rho(r)^{n-1} rather
/// than by differencing. For densities without a positive lower bound the
/// derivative refuses radii below r_min.
inline RadialProfile solve_radial(const RadialDensity& f, const QuadratureConfig& cfg = {},
                                  double r_min = 1e-6) {
  detail::validate_nonnegative(f);
  const int n = f.dim();
  const double lb = f.lower_bound();
  auto fptr = std::make_shared<RadialDensity>(f);
  auto qcfg = std::make_shared<QuadratureConfig>(cfg);

  auto mass = [fptr, qcfg, n](double r) -> double {
    if (r <= 0.0) return 0.0;
    auto w = [&](double s) { return (*fptr)(s)*std::pow(s, n - 1); };
    const double m =
        n * integrate_segmented(w, 0.0, r, *qcfg, fptr->breakpoints(), fptr->singular_radii()).value;
    return std::max(0.0, m);
  };
  auto rho = [mass, n](double r) { return std::pow(mass(r), 1.0 / n); };
  auto rho_dot = [fptr, rho, n, lb, r_min](double r) -> double {
    if (r <= 0.0) throw NumericError("rho_dot undefined at r <= 0");
    double denom = rho(r);
    if (lb > 0.0) {
      denom = std::max(denom, std::pow(lb, 1.0 / n) * r);  // exact lower bound for f >= lb
    } else if (r < r_min) {
      throw NumericError("rho_dot: refusing r < r_min for density without positive lower bound");
    }
    if (denom <= 0.0) throw NumericError("rho_dot: profile vanishes at r=" + std::to_string(r));
    return std::pow(r, n - 1) * (*fptr)(r) / std::pow(denom, n - 1);
  };

  std::vector<double> breaks = f.breakpoints();
  for (double s : f.singular_radii()) breaks.push_back(s);
  std::sort(breaks.begin(), breaks.end());
  return RadialProfile::from_functions(n, rho, rho_dot, 0.0, std::move(breaks), "solved", {},
                                       f.singular_radii());
}

/// Pointwise Jacobian of the stretching: rho_dot(r) rho(r)^{n-1} / r^{n-1}.
inline double jacobian(const RadialProfile& p, double r) {
  if (r <= 0.0) throw NumericError("jacobian undefined at the origin");
  const int n = p.dim();
  return p.rho_dot(r) * std::pow(p.rho(r) / r, n - 1);
}

/// Operator norm of Du at radius r: max of the radial eigenvalue |rho_dot|
/// and the tangential eigenvalue rho/r (multiplicity n-1).
inline double du_operator_norm(const RadialProfile& p, double r) {
  if (r <= 0.0) throw NumericError("du_operator_norm undefined at the origin");
  return std::max(std::abs(p.rho_dot(r)), p.rho(r) / r);
}

/// |d_r u| = |rho_dot(r)|.
inline double radial_derivative_norm(const RadialProfile& p, double r) {
  return std::abs(p.rho_dot(r));
}

struct EnergyResult {
  double value = 0.0;
  double error = 0.0;
  bool finite = true;
};

enum class EnergyTerms {
  kFull,        // |rho_dot|^p + (rho/r)^p
  kRadialOnly,  // |rho_dot|^p, i.e. the |d_r u| part alone
};

/// Bare Sobolev-type integral of the stretching on [a,b]:
///   integral_a^b (|rho_dot|^p + (rho/r)^p) r^{n-1} dr,
/// or the radial-derivative part alone. Comparable to ||Du||_p^p up to
/// dimensional constants, which are not applied here. Divergence is
/// reported as an infinite-energy result.
inline EnergyResult sobolev_energy(const RadialProfile& p, double exponent, double a, double b,
                                   const QuadratureConfig& cfg = {},
                                   EnergyTerms terms = EnergyTerms::kFull) {
  if (exponent < 1.0) throw ConfigError("sobolev_energy: exponent must be >= 1");
  if (a < p.domain_lo() - 1e-12) throw ConfigError("sobolev_energy: interval below profile domain");
  constexpr double kOverflowGuard = 1e30;
  const int n = p.dim();
  auto integrand = [&p, exponent, n, terms](double r) {
    const double rd = std::pow(std::abs(p.rho_dot(r)), exponent);
    const double tang =
        terms == EnergyTerms::kFull ? std::pow(p.rho(r) / r, exponent) : 0.0;
    return (rd + tang) * std::pow(r, n - 1);
  };
  try {
    QuadResult q = integrate_segmented(integrand, a, b, cfg, p.breakpoints());
    if (q.value >= kOverflowGuard) return {std::numeric_limits<double>::infinity(), q.error, false};
    return {q.value, q.error, true};
  } catch (const ToleranceNotMet& err) {
    if (err.best_estimate >= kOverflowGuard)
      return {std::numeric_limits<double>::infinity(), err.error_estimate, false};
    throw;
  } catch (const DivergentIntegral&) {
    return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), false};
  }
}

/// Lebesgue measure of u(A(a,b)): omega_n (rho(b)^n - rho(a)^n).
inline double image_volume(const RadialProfile& p, double a, double b) {
  if (!(0.0 <= a && a < b && b <= 1.0)) throw ConfigError("image_volume: need 0 <= a < b <= 1");
  const int n = p.dim();
  const double ra = (a == 0.0) ? 0.0 : p.rho(a);  // rho(0) = 0 for ball profiles
  return unit_ball_volume(n) * (std::pow(p.rho(b), n) - std::pow(ra, n));
}

}  // namespace jaclab
