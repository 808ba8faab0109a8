#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "jaclab/minimality.hpp"
#include "test_helpers.hpp"

using namespace jaclab;

namespace {
PerturbationParams default_params() { return PerturbationParams::make(2, 2.0, 4.0, -1.5, 0.9); }
constexpr std::size_t kTheta = 256, kRadii = 256;
}  // namespace

TEST_CASE("radial solution as its own competitor", "[minimality]") {
  auto prm = default_params();
  TwistProfile zero{[](double) { return 0.0; }, [](double) { return 0.0; }};
  auto v = twist_competitor(prm, zero, kTheta, kRadii);

  auto rep = quasimin_ratio(v, prm, prm.q);
  // The profile is linear in r, so the trapezoid discretization is exact.
  CHECK(rep.rhs_energy == Catch::Approx(rep.lhs_energy).epsilon(1e-12));
  CHECK(rep.energy_ratio == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(rep.boundary_ok);
  REQUIRE(rep.jacobian_residual_available);
  CHECK(rep.exact_competitor);
  CHECK(rep.jacobian_residual < 1e-3);

  // First moment: radial value with the 1/(4 n^2) slack.
  const double radial_moment = unit_sphere_area(2) * prm.one_minus_gamma_R();
  CHECK(rep.first_moment_lhs == Catch::Approx(radial_moment).epsilon(1e-10));
  CHECK(rep.first_moment_rhs == Catch::Approx(radial_moment / 16.0).epsilon(1e-12));
  CHECK(rep.first_moment_margin > 0.0);
}

TEST_CASE("ray variation of the radial solution is 1 - gamma R", "[minimality]") {
  auto prm = default_params();
  auto prof = annulus_profile(prm);
  auto v = sample_radial_map(prof, 2, prm.R, 64, 128);
  auto vars = ray_variation(v);
  for (double var : vars) CHECK(var == Catch::Approx(0.23713737056616552617).epsilon(1e-10));
}

TEST_CASE("ray variation of a twist against the quadrature oracle", "[minimality]") {
  auto prm = default_params();
  // h(r) = 1 - r: |d_r v|^2 = M^2 + rho(r)^2.
  TwistProfile ramp{[](double r) { return 1.0 - r; }, [](double) { return -1.0; }};
  auto v = twist_competitor(prm, ramp, 64, 2048);
  auto vars = ray_variation(v);
  for (double var : vars) CHECK(var == Catch::Approx(0.25307018545709777721).epsilon(1e-6));
}

TEST_CASE("constant-in-r map has zero variation", "[minimality]") {
  const std::size_t nth = 32, nr = 64;
  auto dirs = detail::uniform_circle(nth);
  auto radii = detail::uniform_radii(0.9, nr);
  std::vector<double> values(nth * nr * 2);
  for (std::size_t i = 0; i < nth; ++i)
    for (std::size_t j = 0; j < nr; ++j) {
      values[(i * nr + j) * 2] = dirs[2 * i];
      values[(i * nr + j) * 2 + 1] = dirs[2 * i + 1];
    }
  AnnulusMap v(2, 0.9, dirs, radii, values, BoundaryCondition::kSphere);
  auto vars = ray_variation(v);
  for (double var : vars) CHECK(var == Catch::Approx(0.0).margin(1e-14));

  // All rays land in Theta_1.
  auto part = partition(v, default_params());
  CHECK(part.theta1.size() == nth);
  CHECK(part.theta2.empty());
}

TEST_CASE("partition threshold and the radial split", "[minimality]") {
  auto prm = default_params();
  CHECK(partition_threshold(prm) == Catch::Approx(0.10451015215332403607).epsilon(1e-13));

  // Radial solution: every ray variation 0.2371 > lambda 0.1045 -> Theta_2.
  auto v = sample_radial_map(annulus_profile(prm), 2, prm.R, 64, 128);
  auto part = partition(v, prm);
  CHECK(part.theta1.empty());
  CHECK(part.theta2.size() == 64);
  CHECK(part.inadmissible == 0);
}

TEST_CASE("mixed synthetic map splits as constructed", "[minimality]") {
  auto prm = default_params();
  auto prof = annulus_profile(prm);
  const std::size_t nth = 64, nr = 128;
  auto dirs = detail::uniform_circle(nth);
  auto radii = detail::uniform_radii(prm.R, nr);
  std::vector<double> values(nth * nr * 2);
  for (std::size_t i = 0; i < nth; ++i) {
    for (std::size_t j = 0; j < nr; ++j) {
      // First half: frozen on the unit circle (zero variation). Second
      // half: the radial solution (variation above the threshold).
      const double rho = i < nth / 2 ? 1.0 : prof.rho(radii[j]);
      values[(i * nr + j) * 2] = rho * dirs[2 * i];
      values[(i * nr + j) * 2 + 1] = rho * dirs[2 * i + 1];
    }
  }
  AnnulusMap v(2, prm.R, dirs, radii, values, BoundaryCondition::kSphere);
  auto part = partition(v, prm);
  CHECK(part.theta1.size() == nth / 2);
  CHECK(part.theta2.size() == nth / 2);
}

TEST_CASE("twists only add energy", "[minimality][property]") {
  auto prm = default_params();
  std::mt19937 rng(0);
  for (int trial = 0; trial < 10; ++trial) {
    auto twist = random_twist(prm, rng);
    auto v = twist_competitor(prm, twist, kTheta, kRadii);
    auto rep = quasimin_ratio(v, prm, prm.q);
    CHECK(rep.lhs_energy <= rep.rhs_energy);
    CHECK(rep.energy_ratio >= 1.0);
    CHECK(rep.first_moment_margin >= 0.0);
    CHECK(rep.markov_lhs <= rep.markov_rhs + 1e-12);
    CHECK(rep.holder_lhs >= rep.holder_rhs - 1e-12);
    REQUIRE(rep.jacobian_residual_available);
    CHECK(rep.jacobian_residual < 1e-3);
    CHECK(rep.boundary_ok);
    // Pointwise |d_r v| >= M for twists, so the first moment dominates the
    // radial one outright.
    CHECK(rep.first_moment_lhs >= unit_sphere_area(2) * prm.one_minus_gamma_R() - 1e-9);
  }
}

TEST_CASE("monotone energy under pointwise increase of |h'|", "[minimality][property]") {
  auto prm = default_params();
  double prev = 0.0;
  for (double scale : {0.0, 0.5, 1.0, 2.0}) {
    TwistProfile t{[scale](double r) { return scale * 0.5 * (1.0 - r); },
                   [scale](double) { return -scale * 0.5; }};
    auto v = twist_competitor(prm, t, 128, 128);
    auto rep = quasimin_ratio(v, prm, prm.q);
    CHECK(rep.rhs_energy >= prev - 1e-12);
    prev = rep.rhs_energy;
  }
}

TEST_CASE("twist jacobian residual converges at second order", "[minimality]") {
  auto prm = default_params();
  std::mt19937 rng(7);
  auto twist = random_twist(prm, rng);
  auto coarse = twist_competitor(prm, twist, kTheta, kRadii);
  auto fine = twist_competitor(prm, twist, 2 * kTheta, 2 * kRadii);
  const double res_c = quasimin_ratio(coarse, prm, prm.q).jacobian_residual;
  const double res_f = quasimin_ratio(fine, prm, prm.q).jacobian_residual;
  const double order = std::log2(res_c / res_f);
  CHECK(order >= 1.5);
  CHECK(res_c < 1e-3);
}

TEST_CASE("boundary violation and the weakened condition", "[minimality]") {
  auto prm = default_params();
  TwistProfile rotated{[](double) { return 0.4; }, [](double) { return 0.0; }};
  CHECK_THROWS_AS(twist_competitor(prm, rotated, 64, 64), ConfigError);
  // The weakened |v| = 1 condition admits the rotation.
  auto v = twist_competitor(prm, rotated, 64, 64, BoundaryCondition::kSphere);
  auto rep = quasimin_ratio(v, prm, prm.q);
  CHECK(rep.boundary_mode == "sphere");
  CHECK(rep.boundary_ok);
}

TEST_CASE("rotated boundary values leave the diagnostics unchanged", "[minimality]") {
  auto prm = default_params();
  std::mt19937 rng(11);
  auto base = random_twist(prm, rng);
  const double shift = 0.3;
  // Same derivative, boundary rotated by `shift`: admitted under the
  // weakened condition, with identical energies and margins.
  TwistProfile shifted{[base, shift](double r) { return base.h(r) + shift; }, base.dh};
  auto v0 = twist_competitor(prm, base, 128, 128);
  auto v1 = twist_competitor(prm, shifted, 128, 128, BoundaryCondition::kSphere);
  auto r0 = quasimin_ratio(v0, prm, prm.q);
  auto r1 = quasimin_ratio(v1, prm, prm.q);
  CHECK(r1.rhs_energy == Catch::Approx(r0.rhs_energy).epsilon(1e-12));
  CHECK(r1.first_moment_lhs == Catch::Approx(r0.first_moment_lhs).epsilon(1e-12));
  CHECK(r1.holder_lhs == Catch::Approx(r0.holder_lhs).epsilon(1e-12));
  CHECK(r1.boundary_ok);
}

TEST_CASE("image accounting for the radial solution", "[minimality]") {
  auto prm = default_params();
  auto v = sample_radial_map(annulus_profile(prm), 2, prm.R, kTheta, kRadii);
  auto part = partition(v, prm);
  auto rep = image_accounting(v, part, prm);

  // Image of A(R,1) is A(gamma R, 1): binned volume within 2%.
  const double target = M_PI * (1.0 - std::pow(prm.gamma * prm.R, 2));
  CHECK(rep.source_mass == Catch::Approx(target).epsilon(1e-10));
  CHECK(std::abs(rep.volume_rel_error) < 0.02);
  CHECK_FALSE(rep.resolution_warning);

  // Theta_1 is empty for the radial map: shell containment holds vacuously.
  CHECK(rep.theta1_count == 0);
  CHECK(rep.shell_max_deviation == 0.0);

  CHECK(rep.markov_ok);
  CHECK(rep.sector_max_rel_error < 0.05);
  CHECK(rep.max_bin_multiplicity <= 2);  // only adjacent sectors share cells
}

TEST_CASE("shell containment for a damped synthetic map", "[minimality]") {
  auto prm = default_params();
  const std::size_t nth = 128, nr = 128;
  auto dirs = detail::uniform_circle(nth);
  auto radii = detail::uniform_radii(prm.R, nr);
  const double lambda = partition_threshold(prm);
  // Rays relax inside the shell [1 - lambda/2, 1]: variation stays below
  // lambda and the image sits inside A[1 - lambda, 1].
  std::vector<double> values(nth * nr * 2);
  for (std::size_t i = 0; i < nth; ++i)
    for (std::size_t j = 0; j < nr; ++j) {
      const double t = (radii[j] - prm.R) / (1.0 - prm.R);
      const double rho = 1.0 - 0.5 * lambda * (1.0 - t);
      values[(i * nr + j) * 2] = rho * dirs[2 * i];
      values[(i * nr + j) * 2 + 1] = rho * dirs[2 * i + 1];
    }
  AnnulusMap v(2, prm.R, dirs, radii, values, BoundaryCondition::kSphere);
  auto part = partition(v, prm);
  REQUIRE(part.theta1.size() == nth);
  auto rep = image_accounting(v, part, prm);
  CHECK(rep.shell_max_deviation <= 0.0);
}

TEST_CASE("inadmissible rays are flagged and excluded", "[minimality]") {
  auto prm = default_params();
  auto prof = annulus_profile(prm);
  const std::size_t nth = 16, nr = 64;
  auto dirs = detail::uniform_circle(nth);
  auto radii = detail::uniform_radii(prm.R, nr);
  std::vector<double> values(nth * nr * 2);
  for (std::size_t i = 0; i < nth; ++i)
    for (std::size_t j = 0; j < nr; ++j) {
      values[(i * nr + j) * 2] = prof.rho(radii[j]) * dirs[2 * i];
      values[(i * nr + j) * 2 + 1] = prof.rho(radii[j]) * dirs[2 * i + 1];
    }
  values[(3 * nr + 10) * 2] = std::nan("");  // corrupt one node on ray 3
  AnnulusMap v(2, prm.R, dirs, radii, values);
  auto part = partition(v, prm);
  CHECK(part.inadmissible == 1);
  CHECK(part.theta2.size() == nth - 1);

  // An all-NaN map has no admissible rays at all.
  std::vector<double> bad(nth * nr * 2, std::nan(""));
  AnnulusMap vb(2, prm.R, dirs, radii, bad);
  CHECK_THROWS_AS(ray_variation(vb), NumericError);
}

TEST_CASE("fibonacci directions support the ray diagnostics for n = 3", "[minimality]") {
  auto prm = PerturbationParams::make(3, 2.0, 4.0, -1.5, 0.9);
  auto v = sample_radial_map(annulus_profile(prm), 3, prm.R, 128, 64);
  auto vars = ray_variation(v);
  for (double var : vars) CHECK(var == Catch::Approx(prm.one_minus_gamma_R()).epsilon(1e-10));

  // No grid structure on scattered directions: the map stays an inexact
  // competitor with no residual available.
  auto rep = quasimin_ratio(v, prm, prm.q);
  CHECK_FALSE(rep.jacobian_residual_available);
  CHECK_FALSE(rep.exact_competitor);
  CHECK(rep.first_moment_margin >= 0.0);
}
