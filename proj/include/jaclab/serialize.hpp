#pragma once

// JSON and CSV serialization of the domain objects. All JSON uses ordered
// keys so that identical inputs produce byte-identical output; CSV floats
// are printed with 17 significant digits.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "jaclab/blowup.hpp"
#include "jaclab/errors.hpp"
#include "jaclab/minimality.hpp"
#include "jaclab/norms.hpp"
#include "jaclab/perturbation.hpp"
#include "jaclab/radial.hpp"

namespace jaclab {

using json = nlohmann::ordered_json;

inline std::string format_g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---- densities ----

inline json to_json(const RadialDensity& f) {
  json j;
  j["kind"] = f.kind();
  j["n"] = f.dim();
  if (f.kind() == "table") {
    const PchipInterpolant* t = f.table_data();
    j["samples"] = json::object();
    j["samples"]["r"] = t->knots();
    j["samples"]["value"] = t->values();
  } else if (f.kind() == "piecewise") {
    j["params"] = json::object();
    j["params"]["breaks"] = f.breakpoints();
    j["params"]["values"] = f.params();
  } else if (f.kind() == "constant") {
    j["params"] = json::object();
    j["params"]["value"] = f.params()[0];
  } else if (f.kind() == "affine") {
    j["params"] = json::object();
    j["params"]["a"] = f.params()[0];
    j["params"]["b"] = f.params()[1];
  } else if (f.kind() == "power") {
    j["params"] = json::object();
    j["params"]["coeff"] = f.params()[0];
    j["params"]["exponent"] = f.params()[1];
  } else if (f.kind() == "singular_power") {
    j["params"] = json::object();
    j["params"]["c"] = f.params()[0];
    j["params"]["kappa"] = f.params()[1];
    j["params"]["r0"] = f.params()[2];
    j["params"]["exponent"] = f.params()[3];
    j["params"]["width"] = f.params()[4];
  } else {
    throw ConfigError("density kind '" + f.kind() + "' is not serializable");
  }
  return j;
}

inline RadialDensity density_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("n"))
    throw ConfigError("density spec: need an object with 'kind' and 'n'");
  const std::string kind = j.at("kind").get<std::string>();
  const int n = j.at("n").get<int>();
  const json params = j.value("params", json::object());
  if (kind == "constant") return RadialDensity::constant(n, params.at("value").get<double>());
  if (kind == "affine")
    return RadialDensity::affine(n, params.at("a").get<double>(), params.at("b").get<double>());
  if (kind == "power")
    return RadialDensity::power(n, params.at("coeff").get<double>(),
                                params.at("exponent").get<double>());
  if (kind == "piecewise")
    return RadialDensity::piecewise_constant(n, params.at("breaks").get<std::vector<double>>(),
                                             params.at("values").get<std::vector<double>>());
  if (kind == "table") {
    const json& s = j.at("samples");
    return RadialDensity::table(n, s.at("r").get<std::vector<double>>(),
                                s.at("value").get<std::vector<double>>());
  }
  if (kind == "singular_power")
    return RadialDensity::singular_power(n, params.at("c").get<double>(),
                                         params.at("kappa").get<double>(),
                                         params.at("r0").get<double>(),
                                         params.at("exponent").get<double>(),
                                         params.at("width").get<double>());
  throw ConfigError("unknown density kind: " + kind);
}

// ---- profiles ----

/// Analytic kinds keep their parameters; anything else exports a sample
/// table (r, rho, rho_dot) on a uniform grid.
inline json to_json(const RadialProfile& p, std::size_t samples = 257) {
  json j;
  j["kind"] = p.kind();
  j["n"] = p.dim();
  if (p.kind() == "identity") return j;
  if (p.kind() == "power" || p.kind() == "annulus") {
    j["params"] = p.params();
    return j;
  }
  j["samples"] = json::object();
  std::vector<double> rs, rho, rho_dot;
  const double lo = std::max(p.domain_lo(), 1e-6);
  for (std::size_t i = 0; i < samples; ++i) {
    const double r = lo + (1.0 - lo) * static_cast<double>(i) / static_cast<double>(samples - 1);
    rs.push_back(r);
    rho.push_back(p.rho(r));
    rho_dot.push_back(p.rho_dot(r));
  }
  j["samples"]["r"] = rs;
  j["samples"]["rho"] = rho;
  j["samples"]["rho_dot"] = rho_dot;
  return j;
}

// ---- perturbation ----

inline json to_json(const PerturbationParams& prm) {
  json j;
  j["n"] = prm.n;
  j["p"] = prm.p;
  j["q"] = prm.q;
  j["alpha"] = prm.alpha;
  j["R"] = prm.R;
  j["gamma"] = prm.gamma;
  j["M"] = prm.M;
  return j;
}

/// gamma and M are recomputed from (n,p,q,alpha,R) and cross-checked
/// against the stored values.
inline PerturbationParams params_from_json(const json& j) {
  PerturbationParams prm = PerturbationParams::make(
      j.at("n").get<int>(), j.at("p").get<double>(), j.at("q").get<double>(),
      j.at("alpha").get<double>(), j.at("R").get<double>());
  if (j.contains("gamma") &&
      std::abs(j.at("gamma").get<double>() - prm.gamma) > 1e-12 * std::abs(prm.gamma))
    throw ConfigError("perturbation params: stored gamma disagrees with the coupling");
  if (j.contains("M") && std::abs(j.at("M").get<double>() - prm.M) > 1e-12 * std::abs(prm.M))
    throw ConfigError("perturbation params: stored M disagrees with the coupling");
  return prm;
}

inline json to_json(const PerturbedDensity& pert) {
  json j;
  j["kind"] = "perturbed";
  j["params"] = to_json(pert.params());
  j["base"] = to_json(pert.base());
  j["base_mean_R"] = pert.base_mean_R();
  return j;
}

// ---- norms ----

inline json to_json(const NormReport& rep) {
  json j;
  j["space"] = rep.space == "Lp" ? "Lp(" + format_g17(rep.p) + ")" : rep.space;
  j["region"] = (rep.region_lo == 0.0 && rep.region_hi == 1.0)
                    ? json("ball")
                    : json::array({rep.region_lo, rep.region_hi});
  j["value"] = rep.value;
  j["finite"] = rep.finite;
  j["l1_mass"] = rep.l1_mass;
  return j;
}

// ---- scan reports ----

inline constexpr const char* kScanCsvHeader =
    "R,gamma,M,dist_p,energy_exact,energy_surrogate,lp_tail,llogl_tail";

inline std::string scan_to_csv(const ScanReport& rep) {
  std::ostringstream out;
  out << kScanCsvHeader << "\n";
  for (const auto& row : rep.rows) {
    if (!row.ok) continue;
    out << format_g17(row.R) << ',' << format_g17(row.gamma) << ',' << format_g17(row.M) << ','
        << format_g17(row.dist_p) << ',' << format_g17(row.energy_exact) << ','
        << format_g17(row.energy_surrogate) << ',' << format_g17(row.lp_tail) << ','
        << format_g17(row.llogl_tail) << "\n";
  }
  return out.str();
}

inline json to_json(const LinearFit& fit) {
  json j;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["slope_stderr"] = fit.slope_stderr;
  j["points"] = fit.points;
  return j;
}

inline json to_json(const ScanReport& rep) {
  json j;
  j["schema_version"] = 1;
  j["params"] = json::object();
  j["params"]["n"] = rep.n;
  j["params"]["p"] = rep.p;
  j["params"]["q"] = rep.q;
  j["params"]["alpha"] = rep.alpha;
  j["epsilon"] = rep.epsilon;
  j["eta"] = rep.eta;
  j["rows"] = json::array();
  for (const auto& row : rep.rows) {
    json r;
    r["R"] = row.R;
    r["ok"] = row.ok;
    if (!row.ok) {
      r["error"] = row.error;
      j["rows"].push_back(std::move(r));
      continue;
    }
    r["gamma"] = row.gamma;
    r["M"] = row.M;
    r["dist_p"] = row.dist_p;
    r["energy_exact"] = row.energy_exact;
    r["energy_surrogate"] = row.energy_surrogate;
    r["lp_tail"] = row.lp_tail;
    r["llogl_tail"] = row.llogl_tail;
    r["llogl_tail_unweighted"] = row.llogl_tail_unweighted;
    r["min_density"] = row.min_density;
    r["lower_bound_ok"] = row.lower_bound_ok;
    j["rows"].push_back(std::move(r));
  }
  j["fits"] = json::object();
  j["fits"]["energy_exact"] = to_json(rep.fits.energy_exact);
  j["fits"]["energy_surrogate"] = to_json(rep.fits.energy_surrogate);
  j["fits"]["lp_tail"] = to_json(rep.fits.lp_tail);
  j["fits"]["llogl_corrected"] = to_json(rep.fits.llogl);
  j["fits"]["llogl_unweighted_corrected"] = to_json(rep.fits.llogl_unweighted);
  j["dist_within_epsilon"] = rep.dist_within_epsilon;
  j["failed_rows"] = rep.failed_rows;
  return j;
}

inline json to_json(const EstimateReport& rep) {
  json j;
  j["n"] = rep.n;
  j["p"] = rep.p;
  j["c"] = rep.c;
  j["lhs"] = rep.lhs;
  j["rhs"] = rep.rhs;
  j["ratio"] = rep.ratio;
  return j;
}

inline json to_json(const SharpnessReport& rep) {
  json j;
  j["n"] = rep.n;
  j["p"] = rep.p;
  j["q"] = rep.q;
  j["delta"] = rep.delta;
  j["r0"] = rep.r0;
  j["width"] = rep.width;
  j["c"] = rep.c;
  j["kappa"] = rep.kappa;
  j["q_truncation"] = json::object();
  j["q_truncation"]["eps"] = rep.q_eps;
  j["q_truncation"]["energies"] = rep.q_energies;
  j["p_truncation"] = json::object();
  j["p_truncation"]["eps"] = rep.p_eps;
  j["p_truncation"]["norms"] = rep.p_norms;
  j["p_truncation"]["final_delta"] = rep.p_norm_final_delta;
  j["p_truncation"]["cauchy"] = rep.p_norm_cauchy;
  return j;
}

// ---- annulus maps ----

inline json to_json(const AnnulusMap& v) {
  json j;
  j["n"] = v.dim();
  j["R"] = v.inner_radius();
  j["boundary"] = v.boundary_condition() == BoundaryCondition::kIdentity ? "identity" : "sphere";
  json thetas = json::array();
  for (std::size_t i = 0; i < v.num_rays(); ++i) {
    json d = json::array();
    for (int k = 0; k < v.dim(); ++k) d.push_back(v.dir(i, k));
    thetas.push_back(std::move(d));
  }
  j["thetas"] = std::move(thetas);
  j["radii"] = v.radii();
  json values = json::array();
  for (std::size_t i = 0; i < v.num_rays(); ++i)
    for (std::size_t jr = 0; jr < v.num_radii(); ++jr) {
      json pnt = json::array();
      for (int k = 0; k < v.dim(); ++k) pnt.push_back(v.value(i, jr, k));
      values.push_back(std::move(pnt));
    }
  j["values"] = std::move(values);
  return j;
}

inline AnnulusMap annulus_map_from_json(const json& j) {
  const int n = j.at("n").get<int>();
  const double R = j.at("R").get<double>();
  const auto bc = j.value("boundary", "identity") == std::string("sphere")
                      ? BoundaryCondition::kSphere
                      : BoundaryCondition::kIdentity;
  std::vector<double> dirs;
  for (const auto& d : j.at("thetas")) {
    if (d.size() != static_cast<std::size_t>(n))
      throw ConfigError("annulus map: direction arity mismatch");
    for (const auto& c : d) dirs.push_back(c.get<double>());
  }
  std::vector<double> radii = j.at("radii").get<std::vector<double>>();
  std::vector<double> values;
  for (const auto& pnt : j.at("values")) {
    if (pnt.size() != static_cast<std::size_t>(n))
      throw ConfigError("annulus map: value arity mismatch");
    for (const auto& c : pnt) values.push_back(c.get<double>());
  }
  return AnnulusMap(n, R, std::move(dirs), std::move(radii), std::move(values), bc);
}

inline json to_json(const QuasiminReport& rep) {
  json j;
  j["q"] = rep.q;
  j["lambda"] = rep.lambda;
  j["lhs_energy"] = rep.lhs_energy;
  j["rhs_energy"] = rep.rhs_energy;
  j["energy_ratio"] = rep.energy_ratio;
  j["holder"] = json::object();
  j["holder"]["lhs"] = rep.holder_lhs;
  j["holder"]["rhs"] = rep.holder_rhs;
  j["holder"]["margin"] = rep.holder_lhs - rep.holder_rhs;
  j["markov"] = json::object();
  j["markov"]["lhs"] = rep.markov_lhs;
  j["markov"]["rhs"] = rep.markov_rhs;
  j["markov"]["margin"] = rep.markov_rhs - rep.markov_lhs;
  j["first_moment"] = json::object();
  j["first_moment"]["lhs"] = rep.first_moment_lhs;
  j["first_moment"]["rhs"] = rep.first_moment_rhs;
  j["first_moment"]["margin"] = rep.first_moment_margin;
  j["jacobian_residual"] =
      rep.jacobian_residual_available ? json(rep.jacobian_residual) : json(nullptr);
  j["exact_competitor"] = rep.exact_competitor;
  j["residual_gate"] = rep.residual_gate;
  j["boundary_mode"] = rep.boundary_mode;
  j["boundary_ok"] = rep.boundary_ok;
  j["domain_note"] = rep.domain_note;
  return j;
}

inline json to_json(const ImageAccounting& rep) {
  json j;
  j["shell"] = json::object();
  j["shell"]["theta1_count"] = rep.theta1_count;
  j["shell"]["max_deviation"] = rep.shell_max_deviation;
  j["volume"] = json::object();
  j["volume"]["binned"] = rep.binned_volume;
  j["volume"]["source_mass"] = rep.source_mass;
  j["volume"]["rel_error"] = rep.volume_rel_error;
  j["sectors"] = json::object();
  j["sectors"]["binned"] = rep.sector_binned;
  j["sectors"]["mass"] = rep.sector_mass;
  j["sectors"]["max_rel_error"] = rep.sector_max_rel_error;
  j["max_bin_multiplicity"] = rep.max_bin_multiplicity;
  j["markov_volume"] = json::object();
  j["markov_volume"]["lhs"] = rep.markov_lhs;
  j["markov_volume"]["rhs"] = rep.markov_rhs;
  j["markov_volume"]["ok"] = rep.markov_ok;
  j["bins_per_axis"] = rep.bins_per_axis;
  j["refined_shift"] = rep.refined_shift;
  j["resolution_warning"] = rep.resolution_warning;
  return j;
}

// ---- file helpers ----

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << content;
  if (!out) throw ConfigError("failed writing output file: " + path);
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed JSON in ") + path + ": " + e.what());
  }
  return j;
}

}  // namespace jaclab
