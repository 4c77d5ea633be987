#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "oce/loss.hpp"

using Catch::Approx;

namespace {

std::vector<double> linspace(double a, double b, int n)
{
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

oce::LossSpec by_name(const std::string& name)
{
  return name == "avar" ? oce::preset("avar", {0.5}) : oce::preset(name);
}

} // namespace

TEST_CASE("presets satisfy the loss assumptions", "[loss]")
{
  const auto name = GENERATE(as<std::string>{}, "entropic", "mmv", "avar");
  const auto spec = by_name(name);
  const auto xs = linspace(-10.0, 10.0, 401);
  const double z_hi = std::isfinite(spec.conj_domain.hi) ? spec.conj_domain.hi : 5.0;
  const auto zs = linspace(0.01, z_hi, 100);
  const auto rep = oce::check_assumptions(spec, xs, zs, 1e-9);
  INFO(name);
  for (const auto& c : rep.clauses) {
    INFO(c.clause << " worst " << c.worst);
    CHECK(c.passed);
  }
  CHECK(rep.conjugate_max_deviation <= 1e-6);
}

TEST_CASE("entropic and avar examples", "[loss]")
{
  const auto ent = oce::preset("entropic");
  CHECK(ent.l(0.0) == 0.0);
  CHECK(ent.l_conj(1.0) == Approx(0.0).margin(1e-15));
  CHECK(ent.l_conj(0.0) == 1.0);
  CHECK(ent.l_conj(2.0) == Approx(2.0 * std::log(2.0) - 1.0));
  CHECK(std::isinf(ent.l_conj(-0.1)));

  const auto av = oce::preset("avar", {0.25});
  CHECK(av.l(2.0) == Approx(8.0));
  CHECK(av.l(-3.0) == 0.0);
  CHECK(av.l_conj(4.0) == 0.0);
  CHECK(std::isinf(av.l_conj(4.0 + 1e-9)));
  CHECK(av.conj_domain.hi == Approx(4.0));
}

TEST_CASE("mmv conjugate agrees with the brute-force transform", "[loss]")
{
  const auto mmv = oce::preset("mmv");
  for (double z : {0.0, 0.3, 1.0, 2.5, 4.0})
    CHECK(oce::conjugate_numeric(mmv, z, {-20.0, 20.0}) == Approx(mmv.l_conj(z)).margin(1e-8));
}

TEST_CASE("numeric conjugate flags an unbounded supremum", "[loss]")
{
  const auto ent = oce::preset("entropic");
  // z < 0: x z - e^x + 1 grows without bound as x -> -inf.
  CHECK(std::isinf(oce::conjugate_numeric(ent, -0.5, {-50.0, 5.0})));
  const auto av = oce::preset("avar", {0.5});
  CHECK(std::isinf(oce::conjugate_numeric(av, 3.0, {-10.0, 10.0})));
  CHECK_THROWS_AS(oce::conjugate_numeric(ent, 1.0, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("Fenchel-Young on random pairs", "[loss][property]")
{
  const auto name = GENERATE(as<std::string>{}, "entropic", "mmv", "avar");
  const auto spec = by_name(name);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ux(-8.0, 8.0);
  const double z_hi = std::isfinite(spec.conj_domain.hi) ? spec.conj_domain.hi : 6.0;
  std::uniform_real_distribution<double> uz(0.0, z_hi);
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const double x = ux(rng), z = uz(rng);
    if (x * z - spec.l_conj(z) - spec.l(x) > 1e-9 * (1.0 + std::abs(x) + z)) ++violations;
  }
  INFO(name);
  CHECK(violations == 0);
}

TEST_CASE("preset errors", "[loss]")
{
  CHECK_THROWS_AS(oce::preset("quadratic"), std::invalid_argument);
  CHECK_THROWS_AS(oce::preset("avar", {1.5}), std::invalid_argument);
  CHECK_THROWS_AS(oce::preset("avar", {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(oce::preset("avar"), std::invalid_argument);
}

TEST_CASE("checker reports a loss that breaks the assumptions", "[loss]")
{
  oce::LossSpec bad;
  bad.name = "identity";
  bad.loss = [](double x) { return x; };
  bad.conj = [](double) { return 0.0; };
  bad.conj_domain = {1.0, 1.0};
  const auto rep = oce::check_assumptions(bad, linspace(-5, 5, 101), std::vector<double>{1.0}, 1e-9, 2001);
  CHECK_FALSE(rep.all_passed());
  CHECK_FALSE(rep.find("bounded below")->passed);
  CHECK_FALSE(rep.find("l(x)>x left tail")->passed);
  CHECK_FALSE(rep.find("l(x)>x right tail")->passed);
  CHECK(rep.find("convex")->passed);

  oce::LossSpec concave = oce::preset("entropic");
  concave.loss = [](double x) { return x < 0 ? 2.0 * x : x; };
  const auto rep2 = oce::check_assumptions(concave, linspace(-5, 5, 101), std::vector<double>{1.0}, 1e-9, 2001);
  CHECK_FALSE(rep2.find("convex")->passed);
}
