#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <vector>

#include "oce/hjb_free.hpp"
#include "oce/hjbi.hpp"
#include "oce/loss.hpp"
#include "oce/scalar_min.hpp"

#include "support.hpp"

using Catch::Approx;
namespace ts = testing_support;

namespace {

oce::HjbiOptions small_grid()
{
  oce::HjbiOptions o;
  o.n_t = 101;
  o.n_y = 121;
  o.n_z = 41;
  return o;
}

oce::HjbOptions free_grid(std::size_t n_t = 101, std::size_t n_y = 121)
{
  oce::HjbOptions o;
  o.n_t = n_t;
  o.n_y = n_y;
  return o;
}

} // namespace

// ---------------------------------------------------------------------------
// Risk-free HJB

TEST_CASE("constant terminal stays constant", "[hjb]")
{
  const auto p = ts::tanh_problem();
  const auto phi = oce::solve_hjb(p, [](double) { return 2.5; }, free_grid());
  for (double v : phi.values) REQUIRE(v == Approx(2.5).margin(1e-12));
}

TEST_CASE("linear terminal: the control pushes down at full speed", "[hjb]")
{
  const auto p = ts::tanh_problem();
  const auto phi = oce::solve_hjb(p, [](double y) { return y; }, free_grid());
  for (std::size_t i = 0; i < phi.t_grid.size(); ++i)
    for (std::size_t j = 0; j < phi.y_grid.size(); ++j)
      REQUIRE(phi.at(i, j) == Approx(phi.y_grid[j] - (1.0 - phi.t_grid[i])).margin(1e-9));
}

TEST_CASE("quadratic terminal without control", "[hjb]")
{
  auto p = ts::avar_problem();
  p.sigma = {0.7};
  const auto phi = oce::solve_hjb(p, [](double y) { return y * y; }, free_grid());
  // E[(y + 0.7 W)^2] = y^2 + 0.49 (T - t); the stencils are exact on quadratics.
  for (std::size_t i = 0; i < phi.t_grid.size(); i += 10)
    for (std::size_t j = 0; j < phi.y_grid.size(); ++j)
      REQUIRE(phi.at(i, j)
              == Approx(phi.y_grid[j] * phi.y_grid[j] + 0.49 * (1.0 - phi.t_grid[i])).margin(1e-8));
}

TEST_CASE("tanh terminal matches quadrature", "[hjb]")
{
  const auto p = ts::tanh_problem();
  const auto phi = oce::solve_hjb(p, [&](double y) { return p.f(y); }, free_grid(201, 201));
  CHECK(phi.interpolate(0.0, 0.0) == Approx(ts::tanh_phi()).epsilon(0.01));

  const auto pol = oce::extract_policy_2d(phi, p);
  std::vector<double> a(1);
  for (double y : {-2.0, 0.0, 2.0}) {
    pol.control(0.3, std::vector<double>{y}, 1.0, a);
    CHECK(a[0] == -1.0);
  }
}

TEST_CASE("comparison principle and stencil choice", "[hjb][property]")
{
  const auto p = ts::tanh_problem();
  const auto stencil = GENERATE(oce::DriftStencil::hybrid, oce::DriftStencil::upwind);
  auto opt = free_grid();
  opt.stencil = stencil;
  const auto lo = oce::solve_hjb(p, [](double y) { return std::tanh(y); }, opt);
  const auto hi = oce::solve_hjb(p, [](double y) { return std::tanh(y) + 0.1 * std::exp(-y * y); }, opt);
  for (std::size_t q = 0; q < lo.values.size(); ++q) REQUIRE(lo.values[q] <= hi.values[q] + 1e-14);
  // Both stencils approximate the same value.
  CHECK(lo.interpolate(0.0, 0.0) == Approx(ts::tanh_phi()).epsilon(0.05));
}

TEST_CASE("drift infimum", "[hjb]")
{
  const std::vector<double> drifts{-1.0, 0.0, 1.0};
  // Increasing value: the negative drift wins.
  auto [v, arg] = oce::drift_infimum(drifts, 2.0, 1.0);
  CHECK(arg == 0);
  CHECK(v == -1.0); // upwind: backward difference for b < 0
  std::tie(v, arg) = oce::drift_infimum(drifts, 2.0, 1.0, 5.0);
  CHECK(v == -1.5); // centred
  // Flat value: tie goes to the first candidate.
  std::tie(v, arg) = oce::drift_infimum(drifts, 0.0, 0.0);
  CHECK(arg == 0);
}

TEST_CASE("solver input errors", "[hjb]")
{
  const auto p = ts::tanh_problem();
  CHECK_THROWS_AS(oce::solve_hjb(p, [](double y) { return y; }, free_grid(1, 11)), std::invalid_argument);
  CHECK_THROWS_AS(oce::solve_hjb(p, [](double) { return NAN; }, free_grid(11, 11)), oce::NumericalError);
}

// ---------------------------------------------------------------------------
// HJBI

TEST_CASE("adversary supremum", "[hjbi]")
{
  // Concave in beta: interior maximiser -sigma v_yz / (z v_zz).
  auto r = oce::adversary_sup(-2.0, 1.0, 1.0, 1.0, 8.0);
  CHECK(r.beta == Approx(0.5));
  CHECK(r.value == Approx(0.25));
  // Clamped to the bound.
  r = oce::adversary_sup(-0.01, 1.0, 1.0, 1.0, 8.0);
  CHECK(r.beta == 8.0);
  // Convex or flat: bound in the direction of sigma v_yz.
  r = oce::adversary_sup(0.0, -1.0, 1.0, 1.0, 3.0);
  CHECK(r.beta == -3.0);
  CHECK(r.value == Approx(3.0));
  r = oce::adversary_sup(0.0, 0.0, 1.0, 1.0, 3.0);
  CHECK(r.value == 0.0);
}

TEST_CASE("constant terminal gives z c - l*(z) everywhere", "[hjbi]")
{
  const auto name = GENERATE(as<std::string>{}, "entropic", "mmv", "avar");
  const auto spec = name == "avar" ? oce::preset("avar", {0.5}) : oce::preset(name);
  auto p = ts::tanh_problem();
  p.terminal = oce::presets::constant(0.7);
  p.z_box = {0.0, 2.0};
  auto opt = small_grid();
  opt.n_t = 21;
  const auto sol = oce::solve_hjbi(p, spec, opt);
  const auto& V = sol.field;
  for (std::size_t i = 0; i < V.t_grid.size(); ++i)
    for (std::size_t j = 0; j < V.y_grid.size(); ++j)
      for (std::size_t k = 0; k < V.z_grid.size(); ++k) {
        const double z = V.z_grid[k];
        REQUIRE(V.at(i, j, k) == Approx(0.7 * z - spec.l_conj(z)).margin(1e-11));
      }
  CHECK(sol.stats.max_concavity_violation <= 1e-12);
}

TEST_CASE("entropic tanh case against quadrature on a coarse grid", "[hjbi]")
{
  const auto p = ts::tanh_problem();
  const auto spec = oce::preset("entropic");
  auto opt = small_grid();
  opt.n_z = 81; // z = 0.5, 1, 2 on nodes
  const auto sol = oce::solve_hjbi(p, spec, opt);
  const double psi = ts::tanh_psi();
  for (double z : {0.5, 1.0, 2.0}) {
    INFO("z = " << z);
    CHECK(sol.field.interpolate(0.0, 0.0, z) == Approx(z * psi - spec.l_conj(z)).epsilon(0.03));
  }
  CHECK(sol.stats.substeps >= small_grid().n_t - 1);
  CHECK(sol.policy.satisfies_bounds(p.control_box));

  // Terminal and z-edge data are reproduced exactly.
  const auto& V = sol.field;
  const auto& phi = *V.phi;
  const std::size_t last = V.t_grid.size() - 1, nz = V.z_grid.size();
  for (std::size_t j = 0; j < V.y_grid.size(); ++j) {
    for (std::size_t k = 0; k < nz; ++k)
      REQUIRE(V.at(last, j, k) == V.z_grid[k] * p.f(V.y_grid[j]) - spec.l_conj(V.z_grid[k]));
    for (std::size_t i = 0; i < V.t_grid.size(); ++i) {
      REQUIRE(V.at(i, j, 0) == V.z_grid[0] * phi.at(i, j) - spec.l_conj(V.z_grid[0]));
      REQUIRE(V.at(i, j, nz - 1) == V.z_grid[nz - 1] * phi.at(i, j) - spec.l_conj(V.z_grid[nz - 1]));
    }
  }

  // The extracted control pushes down; beta stays inside the ball.
  std::vector<double> a(1), b(1);
  sol.policy.control(0.2, std::vector<double>{0.0}, 1.0, a);
  sol.policy.adversary(0.2, std::vector<double>{0.0}, 1.0, b);
  CHECK(a[0] == -1.0);
  CHECK(std::abs(b[0]) <= 8.0);
}

TEST_CASE("monotone mean-variance, uncontrolled, against quadrature", "[hjbi]")
{
  // The optimal density (X - r + 1)^+ reaches well above 2, so the z box
  // must be wide enough not to cap the adversary.
  auto p = ts::avar_problem();
  p.z_box = {0.0, 4.0};
  const auto spec = oce::preset("mmv");
  auto opt = small_grid();
  opt.n_z = 81;
  opt.extract_policy = false;
  const auto sol = oce::solve_hjbi(p, spec, opt);

  // rho(X) = inf_r E[l(X - r)] + r for X = clamp(N(0,1), -5, 5), by Simpson + golden section.
  auto objective = [&](double r) {
    return ts::normal_expectation([&](double x) { return spec.l(std::clamp(x, -5.0, 5.0) - r); }) + r;
  };
  const double rho = oce::golden_section_minimize(objective, -3.0, 3.0, 1e-9).value;
  CHECK(sol.field.interpolate(0.0, 0.0, 1.0) == Approx(rho).epsilon(0.02));

  // Box-doubling sensitivity: [0, 8] with the same dz agrees with [0, 4].
  p.z_box = {0.0, 8.0};
  opt.n_z = 161;
  const auto wide = oce::solve_hjbi(p, spec, opt);
  CHECK(wide.field.interpolate(0.0, 0.0, 1.0) == Approx(sol.field.interpolate(0.0, 0.0, 1.0)).epsilon(0.005));
}

TEST_CASE("dpp restart reproduces the field", "[hjbi]")
{
  const auto p = ts::tanh_problem();
  const auto spec = oce::preset("entropic");
  auto opt = small_grid();
  opt.n_t = 41;
  const auto sol = oce::solve_hjbi(p, spec, opt);
  const auto restarted = oce::dpp_restart(sol.field, p, spec, 0.5, opt);
  REQUIRE(restarted.t_grid.size() == 21);
  for (std::size_t q = 0; q < restarted.values.size(); ++q) REQUIRE(restarted.values[q] == sol.field.values[q]);
  CHECK_THROWS_AS(oce::dpp_restart(sol.field, p, spec, 0.333, opt), std::invalid_argument);
}

TEST_CASE("larger beta bound never lowers the value", "[hjbi][property]")
{
  const auto p = ts::tanh_problem();
  const auto spec = oce::preset("entropic");
  auto opt = small_grid();
  opt.n_t = 51;
  opt.extract_policy = false;
  auto phi = std::make_shared<const oce::ValueField2D>(
      oce::solve_hjb(p, [&](double y) { return p.f(y); }, free_grid(opt.n_t, opt.n_y)));
  std::vector<double> previous;
  for (double n : {0.5, 2.0, 8.0}) {
    opt.beta_bound = n;
    const auto sol = oce::solve_hjbi(p, spec, phi, opt);
    if (!previous.empty())
      for (std::size_t q = 0; q < previous.size(); ++q) REQUIRE(sol.field.values[q] >= previous[q] - 1e-3);
    previous = sol.field.values;
  }
}

TEST_CASE("hjbi input errors", "[hjbi]")
{
  auto p = ts::tanh_problem();
  const auto av = oce::preset("avar", {0.5});
  CHECK_THROWS(oce::solve_hjbi(p, av, small_grid())); // z_box [0, 8] exceeds dom l* = [0, 2]

  auto phi = std::make_shared<const oce::ValueField2D>(
      oce::solve_hjb(p, [&](double y) { return p.f(y); }, free_grid(11, 11)));
  CHECK_THROWS_AS(oce::solve_hjbi(p, oce::preset("entropic"), phi, small_grid()), std::invalid_argument);
  auto opt = small_grid();
  opt.beta_bound = 0.0;
  CHECK_THROWS_AS(oce::solve_hjbi(p, oce::preset("entropic"), opt), std::invalid_argument);
}
