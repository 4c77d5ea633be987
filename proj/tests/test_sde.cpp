#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oce/loss.hpp"
#include "oce/policy.hpp"
#include "oce/problem.hpp"
#include "oce/sde.hpp"

#include "support.hpp"

using Catch::Approx;

namespace {

oce::ControlProblem drifted(double mu, double sigma)
{
  oce::ControlProblem p;
  p.drift = oce::presets::shifted_control(mu);
  p.drift_affine_in_control = true;
  p.sigma = {sigma};
  p.control_box = oce::Box::interval(-1.0, 1.0);
  p.terminal = oce::presets::linear();
  p.y_box = oce::Box::interval(-50.0, 50.0);
  return p;
}

} // namespace

TEST_CASE("problem validation", "[problem]")
{
  auto p = testing_support::tanh_problem();
  const auto ent = oce::preset("entropic");
  CHECK(oce::check_problem(p, ent).ok());
  const auto rep = oce::check_problem(p, ent);
  CHECK(rep.growth_constant == Approx(0.5).margin(0.01)); // |a| / (1 + |a|) < 1/2

  p.z_box = {0.0, 3.0};
  const auto bad = oce::check_problem(p, oce::preset("avar", {0.5}));
  REQUIRE_FALSE(bad.ok());
  CHECK(bad.errors.front().find("z_box") != std::string::npos);

  oce::ControlProblem empty;
  CHECK_FALSE(oce::check_problem(empty, ent).ok());
}

TEST_CASE("control candidates", "[problem]")
{
  auto p = testing_support::tanh_problem();
  const auto verts = oce::control_candidates(p);
  REQUIRE(verts.size() == 2);
  CHECK(verts[0][0] == -1.0);
  CHECK(verts[1][0] == 1.0);

  p.drift_affine_in_control = false;
  CHECK(oce::control_candidates(p, 33).size() == 33);

  const auto single = oce::control_candidates(testing_support::avar_problem());
  REQUIRE(single.size() == 1);
  CHECK(single[0][0] == 0.0);
}

TEST_CASE("policy field interpolation and bounds", "[policy]")
{
  oce::PolicyField pf(oce::UniformGrid(0, 1, 2), oce::UniformGrid(-1, 1, 3), oce::UniformGrid(0, 2, 3), 1, 4.0);
  for (std::size_t j = 0; j < 3; ++j) {
    pf.alpha_node(0, j, 1)[0] = -1.0 + static_cast<double>(j);
    pf.alpha_node(1, j, 1)[0] = -1.0 + static_cast<double>(j);
  }
  std::vector<double> a(1);
  pf.control(0.5, std::vector<double>{0.5}, 1.0, a);
  CHECK(a[0] == Approx(0.5));
  pf.control(0.5, std::vector<double>{9.0}, 1.0, a); // clamped to the grid
  CHECK(a[0] == Approx(1.0));
  CHECK(pf.satisfies_bounds(oce::Box::interval(-1.0, 1.0)));
  pf.beta_node(0, 0, 0) = 5.0;
  CHECK_FALSE(pf.satisfies_bounds(oce::Box::interval(-1.0, 1.0)));
}

TEST_CASE("uncontrolled moments", "[sde]")
{
  const auto p = drifted(0.3, 0.8);
  const auto pol = oce::PolicyField::constant({0.0}, 0.0, p.horizon);
  const auto batch = oce::simulate_y(p, pol, oce::StartPoint{0.0, {0.5}, 1.0}, {20000, 50, false}, 11);
  const auto st = oce::sample_stats(batch.y_terminal);
  CHECK(std::abs(st.mean - 0.8) <= 4.0 * st.stderr_mean);
  CHECK(st.variance == Approx(0.64).epsilon(0.05));
  CHECK(batch.exit_count == 0);
}

TEST_CASE("Euler with constant coefficients reproduces the Brownian endpoint", "[sde]")
{
  const auto p = drifted(0.0, 1.0);
  const auto pol = oce::PolicyField::constant({1.0}, 0.0, p.horizon);
  const auto batch = oce::simulate_y(p, pol, oce::StartPoint{0.0, {0.0}, 1.0}, {200, 17, true}, 3);
  for (std::size_t q = 0; q < batch.n_paths; ++q) {
    REQUIRE(batch.y_terminal[q] == Approx(1.0 + batch.brownian_terminal[q]).margin(1e-12));
    REQUIRE(batch.y_at(q, 0) == 0.0);
    REQUIRE(batch.y_at(q, 17) == batch.y_terminal[q]);
  }
}

TEST_CASE("seeded runs are reproducible", "[sde]")
{
  const auto p = drifted(0.0, 1.0);
  const auto pol = oce::PolicyField::constant({-0.5}, 0.0, p.horizon);
  const oce::StartPoint s{0.0, {0.0}, 1.0};
  const auto a = oce::simulate_y(p, pol, s, {500, 20, false}, 42);
  const auto b = oce::simulate_y(p, pol, s, {500, 20, false}, 42);
  const auto c = oce::simulate_y(p, pol, s, {500, 20, false}, 43);
  CHECK(a.y_terminal == b.y_terminal);
  CHECK(a.y_terminal != c.y_terminal);

  // Path p does not depend on how many paths are drawn.
  const auto d = oce::simulate_y(p, pol, s, {100, 20, false}, 42);
  for (std::size_t q = 0; q < 100; ++q) REQUIRE(d.y_terminal[q] == a.y_terminal[q]);
}

TEST_CASE("density process is a positive martingale", "[sde]")
{
  const auto pol = oce::PolicyField::constant({0.0}, 1.5, 1.0);
  const auto batch = oce::simulate_z(1.0, pol, oce::StartPoint{0.0, {0.0}, 2.0}, {40000, 20, false}, 5);
  const auto st = oce::sample_stats(batch.z_terminal);
  CHECK(std::abs(st.mean - 2.0) <= 4.0 * st.stderr_mean);
  for (double z : batch.z_terminal) REQUIRE(z > 0.0);
  // Exact step: Z_T = z exp(beta W_T - beta^2 T / 2).
  for (std::size_t q = 0; q < 50; ++q)
    REQUIRE(batch.z_terminal[q]
            == Approx(2.0 * std::exp(1.5 * batch.brownian_terminal[q] - 0.5 * 2.25)).epsilon(1e-10));
}

TEST_CASE("tilted dynamics add sigma^2 beta to the drift", "[sde]")
{
  const auto p = drifted(0.0, 2.0);
  const auto pol = oce::PolicyField::constant({0.0}, 0.5, p.horizon);
  const auto batch = oce::simulate_tilted(p, pol, oce::StartPoint{0.0, {0.0}, 1.0}, {100, 10, false}, 8);
  for (std::size_t q = 0; q < batch.n_paths; ++q)
    REQUIRE(batch.y_terminal[q] == Approx(2.0 + 2.0 * batch.brownian_terminal[q]).margin(1e-12));
}

TEST_CASE("paths leaving the state box are clamped and counted", "[sde]")
{
  auto p = drifted(0.0, 1.0);
  p.y_box = oce::Box::interval(-0.5, 0.5);
  const auto pol = oce::PolicyField::constant({0.0}, 0.0, p.horizon);
  const auto batch = oce::simulate_y(p, pol, oce::StartPoint{0.0, {0.0}, 1.0}, {1000, 50, false}, 1);
  CHECK(batch.exit_count > 900);
  for (double y : batch.y_terminal) REQUIRE(std::abs(y) <= 0.5);
}

TEST_CASE("simulation input errors", "[sde]")
{
  const auto p = drifted(0.0, 1.0);
  const auto pol = oce::PolicyField::constant({0.0}, 0.0, p.horizon);
  CHECK_THROWS_AS(oce::simulate_y(p, pol, oce::StartPoint{0.0, {0.0}, 1.0}, {0, 10, false}, 1), std::invalid_argument);
  CHECK_THROWS_AS(oce::simulate_y(p, pol, oce::StartPoint{1.0, {0.0}, 1.0}, {10, 10, false}, 1), std::invalid_argument);
  CHECK_THROWS_AS(oce::simulate_y(p, pol, oce::StartPoint{0.0, {99.0}, 1.0}, {10, 10, false}, 1), std::invalid_argument);
  CHECK_THROWS_AS(oce::simulate_z(1.0, pol, oce::StartPoint{0.0, {0.0}, 0.0}, {10, 10, false}, 1), std::invalid_argument);
}
