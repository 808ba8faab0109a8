// jaclab command-line front end.
//
// Subcommands: solve-radial, perturb, scan, estimate-check, sharpness,
// minimality, verify. Configuration comes from an optional JSON file
// (--config) with strict key checking; command-line flags win over file
// values. Randomized fixtures are seeded (default 0) and outputs are
// deterministic: fixed JSON key order, 17-significant-digit CSV floats.
//
// Exit codes: 0 ok, 1 invariant failure, 2 config error, 3 numerical
// failure. JACLAB_THREADS caps sweep parallelism.

#include <cstdio>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "jaclab/blowup.hpp"
#include "jaclab/errors.hpp"
#include "jaclab/minimality.hpp"
#include "jaclab/norms.hpp"
#include "jaclab/perturbation.hpp"
#include "jaclab/quadrature.hpp"
#include "jaclab/radial.hpp"
#include "jaclab/serialize.hpp"
#include "jaclab/verify.hpp"

namespace {

using jaclab::json;

struct RunState {
  json config;  // parsed --config file (strict-checked)
  jaclab::QuadratureConfig quad;
  std::string out;
  std::string format = "json";
  unsigned seed = 0;
  std::size_t threads = 0;
};

const std::set<std::string> kCommonKeys{"command", "out",  "format",  "rel_tol",
                                        "abs_tol", "seed", "threads", "max_subdivisions"};

void check_config_keys(const json& cfg, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : cfg.items()) {
    if (!kCommonKeys.contains(key) && !allowed.contains(key))
      throw jaclab::ConfigError("unknown config field: " + key);
  }
}

// Flags win over config-file values: only fill from the file when the flag
// was not passed on the command line.
template <class T>
void fill_from_config(const CLI::Option* opt, const json& cfg, const char* key, T& value) {
  if (opt != nullptr && opt->count() > 0) return;
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

jaclab::RadialDensity parse_density(const std::string& spec, int fallback_n) {
  if (spec.empty()) return jaclab::RadialDensity::constant(fallback_n, 1.0);
  json j;
  if (spec.front() == '@') {
    j = jaclab::read_json_file(spec.substr(1));
  } else {
    try {
      j = json::parse(spec);
    } catch (const nlohmann::json::exception& e) {
      throw jaclab::ConfigError(std::string("malformed density spec: ") + e.what());
    }
  }
  return jaclab::density_from_json(j);
}

void write_outputs(const RunState& st, const json& report, const std::string& csv = "") {
  const bool want_json = st.format == "json" || st.format == "both";
  const bool want_csv = st.format == "csv" || st.format == "both";
  if (st.out.empty()) {
    if (want_json) std::cout << report.dump(2) << "\n";
    if (want_csv && !csv.empty()) std::cout << csv;
    return;
  }
  if (want_json) jaclab::write_text_file(st.out + ".json", report.dump(2) + "\n");
  if (want_csv && !csv.empty()) jaclab::write_text_file(st.out + ".csv", csv);
}

// ---- solve-radial ----

int cmd_solve_radial(const RunState& st, const std::string& density_spec, int n,
                     std::vector<double> exponents, std::size_t samples) {
  auto f = parse_density(density_spec, n);
  auto prof = jaclab::solve_radial(f, st.quad);

  json rep;
  rep["density"] = jaclab::to_json(f);
  rep["n"] = f.dim();

  std::mt19937 rng(st.seed);
  std::uniform_real_distribution<double> radius(0.05, 1.0);
  double residual = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double r = radius(rng);
    const double want = f(r);
    if (want > 1e-12)
      residual = std::max(residual, std::abs(jaclab::jacobian(prof, r) - want) / want);
  }
  rep["roundtrip_max_rel_residual"] = residual;

  std::ostringstream csv;
  csv << "r,rho,rho_dot\n";
  json table = json::array();
  for (std::size_t i = 0; i < samples; ++i) {
    const double r =
        1e-6 + (1.0 - 1e-6) * static_cast<double>(i) / static_cast<double>(samples - 1);
    json row;
    row["r"] = r;
    row["rho"] = prof.rho(r);
    row["rho_dot"] = prof.rho_dot(r);
    csv << jaclab::format_g17(r) << ',' << jaclab::format_g17(prof.rho(r)) << ','
        << jaclab::format_g17(prof.rho_dot(r)) << "\n";
    table.push_back(std::move(row));
  }
  rep["profile"] = std::move(table);

  if (exponents.empty()) exponents = {static_cast<double>(f.dim()), 2.0 * f.dim()};
  json energies = json::object();
  for (double e : exponents) {
    auto en = jaclab::sobolev_energy(prof, e, 0.0, 1.0, st.quad);
    json je;
    je["value"] = en.finite ? json(en.value) : json("infinite");
    je["finite"] = en.finite;
    energies[jaclab::format_g17(e)] = std::move(je);
  }
  rep["energies"] = std::move(energies);
  write_outputs(st, rep, csv.str());
  return 0;
}

// ---- perturb ----

int cmd_perturb(const RunState& st, const std::string& density_spec, int n, double p, double q,
                double alpha, double R) {
  auto prm = jaclab::PerturbationParams::make(n, p, q, alpha, R);
  auto f = parse_density(density_spec, n);
  auto pert = jaclab::PerturbedDensity::build(f, prm, st.quad);

  json rep = jaclab::to_json(pert);
  rep["annulus_mass"] = jaclab::annulus_mass(prm, st.quad);
  auto energy = jaclab::annulus_energy(prm);
  rep["annulus_energy"] = json::object();
  rep["annulus_energy"]["exact"] = energy.exact;
  rep["annulus_energy"]["surrogate"] = energy.surrogate;
  auto tail = jaclab::lp_tail(prm, p, st.quad);
  rep["lp_tail"] = json::object();
  rep["lp_tail"]["value"] = tail.value;
  rep["lp_tail"]["predicted_scale"] = tail.predicted_scale;
  auto ll = jaclab::llogl_tail(prm, st.quad);
  rep["llogl_tail"] = json::object();
  rep["llogl_tail"]["value"] = ll.value;
  rep["llogl_tail"]["l1_mass"] = ll.l1_mass;
  rep["llogl_tail"]["value_unweighted"] = ll.value_unweighted;
  rep["dist_p"] = jaclab::dist(f, pert.density(), p, st.quad);
  write_outputs(st, rep);
  return 0;
}

// ---- scan ----

int cmd_scan(const RunState& st, const std::string& density_spec, int n, double p, double q,
             double alpha, std::vector<double> R_list) {
  if (R_list.empty()) R_list = {0.9, 0.99, 0.999, 0.9999};
  auto f = parse_density(density_spec, n);
  auto rep = jaclab::scan(f, n, p, q, alpha, R_list, st.quad, st.threads);
  json j = jaclab::to_json(rep);
  j["density"] = jaclab::to_json(f);
  write_outputs(st, j, jaclab::scan_to_csv(rep));
  if (rep.failed_rows > 0)
    std::cerr << rep.failed_rows << " row(s) failed; fits use the remaining rows\n";
  return 0;
}

// ---- estimate-check ----

int cmd_estimate_check(const RunState& st, const std::string& density_spec, int n, double p) {
  auto f = parse_density(density_spec, n);
  auto rep = jaclab::estimate_check(f, p, st.quad);
  write_outputs(st, jaclab::to_json(rep));
  return 0;
}

// ---- sharpness ----

int cmd_sharpness(const RunState& st, int n, double p, double q, double delta, double r0,
                  double width, double c) {
  auto rep = jaclab::sharpness_family(n, p, q, delta, st.quad, r0, width, c);
  write_outputs(st, jaclab::to_json(rep));
  return 0;
}

// ---- minimality ----

int cmd_minimality(const RunState& st, int n, double p, double q, double alpha, double R,
                   std::size_t twists, std::size_t grid_theta, std::size_t grid_radii,
                   std::size_t bins) {
  auto prm = jaclab::PerturbationParams::make(n, p, q, alpha, R);
  json rep;
  rep["params"] = jaclab::to_json(prm);

  auto radial = jaclab::sample_radial_map(jaclab::annulus_profile(prm), n, prm.R, grid_theta,
                                          grid_radii);
  auto part = jaclab::partition(radial, prm);
  rep["radial"] = json::object();
  rep["radial"]["quasimin"] = jaclab::to_json(jaclab::quasimin_ratio(radial, prm, q, st.quad));
  if (n == 2)
    rep["radial"]["image"] =
        jaclab::to_json(jaclab::image_accounting(radial, part, prm, st.quad, bins));

  json jtwists = json::array();
  if (twists > 0 && n != 2) throw jaclab::ConfigError("twist competitors require n = 2");
  std::mt19937 rng(st.seed);
  for (std::size_t t = 0; t < twists; ++t) {
    auto twist = jaclab::random_twist(prm, rng);
    auto v = jaclab::twist_competitor(prm, twist, grid_theta, grid_radii);
    json jt;
    jt["index"] = t;
    jt["quasimin"] = jaclab::to_json(jaclab::quasimin_ratio(v, prm, q, st.quad));
    jtwists.push_back(std::move(jt));
  }
  rep["twists"] = std::move(jtwists);
  write_outputs(st, rep);
  return 0;
}

// ---- verify ----

int cmd_verify(const RunState& st, std::vector<std::string> suites, const std::string& fault) {
  jaclab::VerifyOptions opts;
  opts.seed = st.seed;
  opts.suites = std::move(suites);
  opts.inject_fault = fault;
  const auto results = jaclab::run_verification(opts);

  std::size_t failures = 0;
  std::printf("%-14s %-26s %-6s %s\n", "suite", "invariant", "status", "detail");
  for (const auto& r : results) {
    if (!r.passed) ++failures;
    std::printf("%-14s %-26s %-6s %s\n", r.suite.c_str(), r.name.c_str(),
                r.passed ? "ok" : "FAIL", r.detail.c_str());
  }
  std::printf("%zu checks, %zu failed\n", results.size(), failures);
  if (failures > 0) {
    for (const auto& r : results)
      if (!r.passed) {
        std::fprintf(stderr, "invariant failed: %s.%s\n", r.suite.c_str(), r.name.c_str());
        break;
      }
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jaclab: radial solutions, boundary-layer perturbations and "
               "quasiminimality diagnostics for det Du = f on the unit ball"};
  app.require_subcommand(1);

  RunState st;
  std::string config_path;

  struct Shared {
    CLI::Option *out = nullptr, *format = nullptr, *rel = nullptr, *abs = nullptr,
                *maxsub = nullptr, *seed = nullptr, *threads = nullptr;
  };
  auto add_shared = [&](CLI::App* cmd, Shared& sh) {
    cmd->add_option("--config", config_path, "JSON config file (flags win over file values)");
    sh.out = cmd->add_option("--out", st.out, "output base path (writes <out>.json / <out>.csv)");
    sh.format = cmd->add_option("--format", st.format, "json | csv | both")
                    ->check(CLI::IsMember({"json", "csv", "both"}));
    sh.rel = cmd->add_option("--rel-tol", st.quad.rel_tol, "quadrature relative tolerance");
    sh.abs = cmd->add_option("--abs-tol", st.quad.abs_tol, "quadrature absolute tolerance");
    sh.maxsub = cmd->add_option("--max-subdivisions", st.quad.max_subdivisions,
                                "quadrature panel budget");
    sh.seed = cmd->add_option("--seed", st.seed, "seed for randomized fixtures");
    sh.threads = cmd->add_option("--threads", st.threads,
                                 "sweep parallelism cap (0 = JACLAB_THREADS or hardware)");
  };
  auto apply_shared = [&](const Shared& sh) {
    fill_from_config(sh.out, st.config, "out", st.out);
    fill_from_config(sh.format, st.config, "format", st.format);
    fill_from_config(sh.rel, st.config, "rel_tol", st.quad.rel_tol);
    fill_from_config(sh.abs, st.config, "abs_tol", st.quad.abs_tol);
    fill_from_config(sh.maxsub, st.config, "max_subdivisions", st.quad.max_subdivisions);
    fill_from_config(sh.seed, st.config, "seed", st.seed);
    fill_from_config(sh.threads, st.config, "threads", st.threads);
  };

  // solve-radial
  auto* solve = app.add_subcommand("solve-radial", "radial solution of det Du = f");
  Shared sh_solve;
  std::string density_spec;
  int n = 2;
  std::vector<double> exponents;
  std::size_t samples = 129;
  auto* o_dens = solve->add_option("--density", density_spec, "density JSON (inline or @file)");
  auto* o_n = solve->add_option("--n", n, "dimension (>= 2)");
  auto* o_exp = solve->add_option("--exponents", exponents, "energy exponents to report");
  auto* o_samples = solve->add_option("--samples", samples, "profile sample count");
  add_shared(solve, sh_solve);

  // perturb
  auto* perturb = app.add_subcommand("perturb", "build the boundary-layer perturbation");
  Shared sh_perturb;
  double p = 2.0, q = 4.0, alpha = -1.5, R = 0.9;
  auto* o_dens2 = perturb->add_option("--density", density_spec, "base density JSON");
  auto* o_n2 = perturb->add_option("--n", n, "dimension");
  auto* o_p2 = perturb->add_option("--p", p, "data integrability exponent");
  auto* o_q2 = perturb->add_option("--q", q, "target Sobolev exponent");
  auto* o_a2 = perturb->add_option("--alpha", alpha, "blow-up tuning exponent");
  auto* o_R2 = perturb->add_option("--R", R, "inner radius of the annulus");
  add_shared(perturb, sh_perturb);

  // scan
  auto* scan_cmd = app.add_subcommand("scan", "R-sweep with fitted power laws");
  Shared sh_scan;
  std::vector<double> R_list;
  auto* o_dens3 = scan_cmd->add_option("--density", density_spec, "base density JSON");
  auto* o_n3 = scan_cmd->add_option("--n", n, "dimension");
  auto* o_p3 = scan_cmd->add_option("--p", p, "data integrability exponent");
  auto* o_q3 = scan_cmd->add_option("--q", q, "target Sobolev exponent");
  auto* o_a3 = scan_cmd->add_option("--alpha", alpha, "blow-up tuning exponent");
  auto* o_R3 = scan_cmd->add_option("--R-list", R_list, "sweep radii (strictly increasing)");
  add_shared(scan_cmd, sh_scan);

  // estimate-check
  auto* est = app.add_subcommand("estimate-check", "radial a-priori estimate ratio");
  Shared sh_est;
  auto* o_dens4 = est->add_option("--density", density_spec, "density JSON");
  auto* o_n4 = est->add_option("--n", n, "dimension");
  auto* o_p4 = est->add_option("--p", p, "integrability exponent");
  add_shared(est, sh_est);

  // sharpness
  auto* sharp = app.add_subcommand("sharpness", "L^p-not-L^q witness report");
  Shared sh_sharp;
  double delta = 0.05, r0 = 0.9, width = 0.02, cbound = 0.5;
  auto* o_n5 = sharp->add_option("--n", n, "dimension");
  auto* o_p5 = sharp->add_option("--p", p, "integrability exponent");
  auto* o_q5 = sharp->add_option("--q", q, "target exponent (> p)");
  auto* o_d5 = sharp->add_option("--delta", delta, "inner cutoff of the reported interval");
  auto* o_r05 = sharp->add_option("--r0", r0, "singularity location");
  auto* o_w5 = sharp->add_option("--width", width, "support half-width of the spike");
  auto* o_c5 = sharp->add_option("--c", cbound, "lower bound of the witness");
  add_shared(sharp, sh_sharp);

  // minimality
  auto* mini = app.add_subcommand("minimality", "quasiminimality chain diagnostics");
  Shared sh_mini;
  std::size_t twists = 10, grid_theta = 256, grid_radii = 256, bins = 512;
  auto* o_n6 = mini->add_option("--n", n, "dimension");
  auto* o_p6 = mini->add_option("--p", p, "data integrability exponent");
  auto* o_q6 = mini->add_option("--q", q, "energy exponent");
  auto* o_a6 = mini->add_option("--alpha", alpha, "blow-up tuning exponent");
  auto* o_R6 = mini->add_option("--R", R, "inner radius");
  auto* o_t6 = mini->add_option("--twists", twists, "number of seeded twist competitors");
  auto* o_gt6 = mini->add_option("--grid-theta", grid_theta, "directions on the sphere");
  auto* o_gr6 = mini->add_option("--grid-radii", grid_radii, "radii per ray");
  auto* o_b6 = mini->add_option("--bins", bins, "target-space bins per axis");
  add_shared(mini, sh_mini);

  // verify
  auto* verify = app.add_subcommand("verify", "run the module invariant suites");
  Shared sh_verify;
  std::vector<std::string> suites;
  std::string fault;
  auto* o_s7 = verify->add_option("--suite", suites, "restrict to named suites");
  auto* o_f7 = verify->add_option("--inject-fault", fault, "tamper with one check (testing)")
                   ->group("");  // hidden
  add_shared(verify, sh_verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!config_path.empty()) st.config = jaclab::read_json_file(config_path);

    if (solve->parsed()) {
      check_config_keys(st.config, {"density", "n", "exponents", "samples"});
      apply_shared(sh_solve);
      if (o_dens->count() == 0 && st.config.contains("density"))
        density_spec = st.config["density"].is_string()
                           ? st.config["density"].get<std::string>()
                           : st.config["density"].dump();
      fill_from_config(o_n, st.config, "n", n);
      fill_from_config(o_exp, st.config, "exponents", exponents);
      fill_from_config(o_samples, st.config, "samples", samples);
      return cmd_solve_radial(st, density_spec, n, exponents, samples);
    }
    if (perturb->parsed()) {
      check_config_keys(st.config, {"density", "n", "p", "q", "alpha", "R"});
      apply_shared(sh_perturb);
      if (o_dens2->count() == 0 && st.config.contains("density"))
        density_spec = st.config["density"].is_string()
                           ? st.config["density"].get<std::string>()
                           : st.config["density"].dump();
      fill_from_config(o_n2, st.config, "n", n);
      fill_from_config(o_p2, st.config, "p", p);
      fill_from_config(o_q2, st.config, "q", q);
      fill_from_config(o_a2, st.config, "alpha", alpha);
      fill_from_config(o_R2, st.config, "R", R);
      return cmd_perturb(st, density_spec, n, p, q, alpha, R);
    }
    if (scan_cmd->parsed()) {
      check_config_keys(st.config, {"density", "n", "p", "q", "alpha", "R_list"});
      apply_shared(sh_scan);
      if (o_dens3->count() == 0 && st.config.contains("density"))
        density_spec = st.config["density"].is_string()
                           ? st.config["density"].get<std::string>()
                           : st.config["density"].dump();
      fill_from_config(o_n3, st.config, "n", n);
      fill_from_config(o_p3, st.config, "p", p);
      fill_from_config(o_q3, st.config, "q", q);
      fill_from_config(o_a3, st.config, "alpha", alpha);
      fill_from_config(o_R3, st.config, "R_list", R_list);
      return cmd_scan(st, density_spec, n, p, q, alpha, R_list);
    }
    if (est->parsed()) {
      check_config_keys(st.config, {"density", "n", "p"});
      apply_shared(sh_est);
      if (o_dens4->count() == 0 && st.config.contains("density"))
        density_spec = st.config["density"].is_string()
                           ? st.config["density"].get<std::string>()
                           : st.config["density"].dump();
      fill_from_config(o_n4, st.config, "n", n);
      fill_from_config(o_p4, st.config, "p", p);
      return cmd_estimate_check(st, density_spec, n, p);
    }
    if (sharp->parsed()) {
      check_config_keys(st.config, {"n", "p", "q", "delta", "r0", "width", "c"});
      apply_shared(sh_sharp);
      fill_from_config(o_n5, st.config, "n", n);
      fill_from_config(o_p5, st.config, "p", p);
      fill_from_config(o_q5, st.config, "q", q);
      fill_from_config(o_d5, st.config, "delta", delta);
      fill_from_config(o_r05, st.config, "r0", r0);
      fill_from_config(o_w5, st.config, "width", width);
      fill_from_config(o_c5, st.config, "c", cbound);
      return cmd_sharpness(st, n, p, q, delta, r0, width, cbound);
    }
    if (mini->parsed()) {
      check_config_keys(st.config,
                        {"n", "p", "q", "alpha", "R", "twists", "grid_theta", "grid_radii", "bins"});
      apply_shared(sh_mini);
      fill_from_config(o_n6, st.config, "n", n);
      fill_from_config(o_p6, st.config, "p", p);
      fill_from_config(o_q6, st.config, "q", q);
      fill_from_config(o_a6, st.config, "alpha", alpha);
      fill_from_config(o_R6, st.config, "R", R);
      fill_from_config(o_t6, st.config, "twists", twists);
      fill_from_config(o_gt6, st.config, "grid_theta", grid_theta);
      fill_from_config(o_gr6, st.config, "grid_radii", grid_radii);
      fill_from_config(o_b6, st.config, "bins", bins);
      return cmd_minimality(st, n, p, q, alpha, R, twists, grid_theta, grid_radii, bins);
    }
    if (verify->parsed()) {
      check_config_keys(st.config, {"suites", "inject_fault"});
      apply_shared(sh_verify);
      fill_from_config(o_s7, st.config, "suites", suites);
      fill_from_config(o_f7, st.config, "inject_fault", fault);
      return cmd_verify(st, suites, fault);
    }
  } catch (const jaclab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const jaclab::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const jaclab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
