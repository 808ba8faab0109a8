// Exercises the installed binary end to end: exit codes, output files,
// strict config parsing, determinism.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

const std::string kCli = JACLAB_CLI_PATH;
const std::string kTmp = JACLAB_TEST_TMP;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("solve-radial writes profile and reports residual", "[cli]") {
  const std::string out = kTmp + "/solve";
  REQUIRE(run("solve-radial --out " + out + " --format both") == 0);
  auto j = nlohmann::json::parse(slurp(out + ".json"));
  CHECK(j.at("roundtrip_max_rel_residual").get<double>() < 1e-10);
  CHECK(j.at("profile").size() == 129);
  const std::string csv = slurp(out + ".csv");
  CHECK(csv.rfind("r,rho,rho_dot\n", 0) == 0);
}

TEST_CASE("solve-radial normalizes the linear density", "[cli]") {
  const std::string out = kTmp + "/solve_lin";
  REQUIRE(run("solve-radial --density "
              "'{\"kind\":\"power\",\"n\":2,\"params\":{\"coeff\":1.5,\"exponent\":1.0}}' "
              "--out " + out) == 0);
  auto j = nlohmann::json::parse(slurp(out + ".json"));
  const auto& last = j.at("profile").back();
  CHECK(std::abs(last.at("rho").get<double>() - 1.0) < 1e-8);
}

TEST_CASE("malformed density spec exits 2 without output", "[cli]") {
  const std::string out = kTmp + "/never";
  std::remove((out + ".json").c_str());
  CHECK(run("solve-radial --density 'not-json' --out " + out) == 2);
  std::ifstream probe(out + ".json");
  CHECK_FALSE(probe.good());
}

TEST_CASE("scan emits csv and json with fits", "[cli]") {
  const std::string out = kTmp + "/scan";
  REQUIRE(run("scan --out " + out + " --format both") == 0);
  auto j = nlohmann::json::parse(slurp(out + ".json"));
  CHECK(std::abs(j.at("fits").at("energy_surrogate").at("slope").get<double>() + 0.5) < 1e-10);
  CHECK(std::abs(j.at("fits").at("lp_tail").at("slope").get<double>() - 0.25) < 0.05);
  const std::string csv = slurp(out + ".csv");
  CHECK(csv.rfind("R,gamma,M,dist_p,energy_exact,energy_surrogate,lp_tail,llogl_tail\n", 0) == 0);
}

TEST_CASE("scan refuses two-point sweeps", "[cli]") {
  CHECK(run("scan --R-list 0.9 0.99") == 2);
}

TEST_CASE("p=1 scan populates the llogl columns", "[cli]") {
  const std::string out = kTmp + "/scan1";
  REQUIRE(run("scan --p 1 --q 4 --alpha -1.5 --out " + out) == 0);
  auto j = nlohmann::json::parse(slurp(out + ".json"));
  for (const auto& row : j.at("rows")) {
    CHECK(row.at("llogl_tail").get<double>() > 0.0);
  }
  CHECK(j.at("fits").contains("llogl_corrected"));
  CHECK(j.at("fits").contains("llogl_unweighted_corrected"));
}

TEST_CASE("config file with unknown field is rejected", "[cli]") {
  const std::string cfg = kTmp + "/bad_cfg.json";
  spit(cfg, "{\"R_values\": [0.9, 0.99, 0.999]}");
  CHECK(run("scan --config " + cfg) == 2);
}

TEST_CASE("flags win over config file values", "[cli]") {
  const std::string cfg = kTmp + "/cfg_alpha.json";
  spit(cfg, "{\"alpha\": -1.2, \"R_list\": [0.9, 0.99, 0.999]}");
  const std::string out = kTmp + "/scan_flags";
  REQUIRE(run("scan --config " + cfg + " --alpha -1.5 --out " + out) == 0);
  auto j = nlohmann::json::parse(slurp(out + ".json"));
  CHECK(j.at("params").at("alpha").get<double>() == -1.5);
}

TEST_CASE("identical config and seed give byte-identical json", "[cli]") {
  const std::string cfg = kTmp + "/det_cfg.json";
  spit(cfg, "{\"R_list\": [0.9, 0.99, 0.999, 0.9999], \"seed\": 3}");
  const std::string o1 = kTmp + "/det1", o2 = kTmp + "/det2";
  REQUIRE(run("scan --config " + cfg + " --out " + o1 + " --format both") == 0);
  REQUIRE(run("scan --config " + cfg + " --out " + o2 + " --format both") == 0);
  CHECK(slurp(o1 + ".json") == slurp(o2 + ".json"));
  CHECK(slurp(o1 + ".csv") == slurp(o2 + ".csv"));
}

TEST_CASE("verify exits clean and honors suite filters", "[cli]") {
  CHECK(run("verify --suite quadrature --suite norms") == 0);
}

TEST_CASE("injected fault trips the named invariant", "[cli]") {
  const std::string out = kTmp + "/verify_fault.txt";
  const std::string cmd =
      kCli + " verify --suite radial --inject-fault radial.roundtrip > " + out + " 2>&1";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 1);
  const std::string text = slurp(out);
  CHECK(text.find("roundtrip") != std::string::npos);
  CHECK(text.find("FAIL") != std::string::npos);
}

TEST_CASE("estimate-check and sharpness emit reports", "[cli]") {
  const std::string out = kTmp + "/est";
  REQUIRE(run("estimate-check --out " + out) == 0);
  auto j = nlohmann::json::parse(slurp(out + ".json"));
  CHECK(j.at("ratio").get<double>() > 0.0);

  const std::string out2 = kTmp + "/sharp";
  REQUIRE(run("sharpness --out " + out2) == 0);
  auto j2 = nlohmann::json::parse(slurp(out2 + ".json"));
  CHECK(j2.at("q_truncation").at("energies").size() == 6);
  CHECK(j2.at("p_truncation").at("cauchy").get<bool>());
}

TEST_CASE("minimality command reports the chain", "[cli]") {
  const std::string out = kTmp + "/mini";
  REQUIRE(run("minimality --twists 2 --grid-theta 64 --grid-radii 64 --bins 256 --out " + out) ==
          0);
  auto j = nlohmann::json::parse(slurp(out + ".json"));
  CHECK(j.at("radial").at("quasimin").at("energy_ratio").get<double>() ==
        Catch::Approx(1.0).epsilon(1e-10));
  CHECK(j.at("twists").size() == 2);
  for (const auto& t : j.at("twists"))
    CHECK(t.at("quasimin").at("energy_ratio").get<double>() >= 1.0);
}
