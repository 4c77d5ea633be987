#include <catch2/catch_amalgamated.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "oce/config.hpp"
#include "oce/io.hpp"

using Catch::Approx;
using nlohmann::json;
namespace fs = std::filesystem;

#ifndef OCE_FIXTURE_DIR
#error "OCE_FIXTURE_DIR must point at the fixtures directory"
#endif

namespace {

std::string error_field(const json& doc)
{
  try {
    oce::parse_config(doc);
  } catch (const oce::ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("shipped fixtures parse", "[config]")
{
  const auto tanh_cfg = oce::load_config(fs::path(OCE_FIXTURE_DIR) / "entropic_tanh.json");
  CHECK(tanh_cfg.loss_spec().name == "entropic");
  CHECK(tanh_cfg.n_z == 81);
  const auto p = tanh_cfg.problem();
  CHECK(p.control_dim() == 1);
  CHECK(p.f(0.5) == Approx(std::tanh(0.5)));
  CHECK(p.z_box.hi == 8.0);

  const auto av = oce::load_config(fs::path(OCE_FIXTURE_DIR) / "avar_uncontrolled.json");
  CHECK(av.loss_spec().params.at(0) == 0.5);
  CHECK(av.problem().f(7.0) == 5.0);
  CHECK(av.hjbi_options().n_z == 41);
}

TEST_CASE("defaults", "[config]")
{
  const auto c = oce::parse_config(json::object());
  CHECK(c.n_t == 201);
  CHECK(c.beta_bound == 8.0);
  CHECK(c.loss_spec().name == "entropic");
}

TEST_CASE("field-level errors", "[config]")
{
  CHECK(error_field({{"grids", {{"z_box", {0.0, 3.0}}}}, {"loss", {{"name", "avar"}, {"gamma", 0.5}}}})
        == "grids.z_box");
  CHECK(error_field({{"grids", {{"n_y", 2}}}}) == "grids.n_y");
  CHECK(error_field({{"grids", {{"n_t", -4}}}}) == "grids.n_t");
  CHECK(error_field({{"grids", {{"y_box", {1.0}}}}}) == "grids.y_box");
  CHECK(error_field({{"gridz", json::object()}}) == "gridz");
  CHECK(error_field({{"problem", {{"sigma", "one"}}}}) == "problem.sigma");
  CHECK(error_field({{"problem", {{"sigma", -1.0}}}}) == "problem.sigma");
  CHECK(error_field({{"problem", {{"terminal", {{"name", "cubic"}}}}}}) == "problem.terminal.name");
  CHECK(error_field({{"problem", {{"terminal", {{"name", "clamped_linear"}, {"lo", -1}}}}}}) == "problem.terminal.hi");
  CHECK(error_field({{"problem", {{"drift", {{"name", "constant"}, {"mu", "x"}}}}}}) == "problem.drift.mu");
  CHECK(error_field({{"loss", {{"name", "avar"}}}}) == "loss.gamma");
  CHECK(error_field({{"loss", {{"name", "avar"}, {"gamma", 2.0}}}}) == "loss");
  CHECK(error_field({{"loss", {{"name", "entropic"}, {"theta", 2.0}}}}) == "loss");
  CHECK(error_field({{"start", {{"y", 9.0}}}}) == "start.y");
  CHECK(error_field({{"start", {{"z_checks", {0.5, 9.0}}}}}) == "start.z_checks");
  CHECK(error_field({{"seed", -3}}) == "seed");
  CHECK(error_field({{"validate", {{"suite", "everything"}}}}) == "validate.suite");
  CHECK(error_field({{"simulate", {{"paths", 5}}}}) == "simulate.paths");
  CHECK_THROWS_AS(oce::load_config("/nonexistent/config.json"), oce::ConfigError);
}

TEST_CASE("number formatting round-trips", "[io][property]")
{
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
    const auto s = oce::io::format_double(x);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    REQUIRE(back == x);
  }
  CHECK(oce::io::format_double(0.5) == "0.5");
  CHECK(oce::io::format_double(-2.0) == "-2");
}

TEST_CASE("field CSV layout", "[io]")
{
  const fs::path dir = fs::temp_directory_path() / "oce_io_test";
  fs::remove_all(dir);

  oce::ValueField3D f(oce::UniformGrid(0, 1, 3), oce::UniformGrid(-1, 1, 2), oce::UniformGrid(0, 2, 3), 4.0);
  for (std::size_t q = 0; q < f.values.size(); ++q) f.values[q] = static_cast<double>(q);
  oce::io::write_field_slices(dir / "value", f);
  CHECK(fs::exists(dir / "value" / "value_t0000.csv"));
  CHECK(fs::exists(dir / "value" / "value_t0002.csv"));
  CHECK(slurp(dir / "value" / "value_t0001.csv") == "y\\z,0,1,2\n-1,6,7,8\n1,9,10,11\n");

  oce::io::write_field_slices(dir / "strided", f, 5);
  CHECK(fs::exists(dir / "strided" / "value_t0000.csv"));
  CHECK_FALSE(fs::exists(dir / "strided" / "value_t0001.csv"));
  CHECK(fs::exists(dir / "strided" / "value_t0002.csv"));

  oce::ValueField2D g(oce::UniformGrid(0, 1, 2), oce::UniformGrid(0, 1, 2));
  g.values = {1, 2, 3, 4};
  oce::io::write_field_csv(dir / "phi.csv", g);
  CHECK(slurp(dir / "phi.csv") == "t\\y,0,1\n0,1,2\n1,3,4\n");

  oce::PolicyField pol(oce::UniformGrid(0, 1, 2), oce::UniformGrid(-1, 1, 2), oce::UniformGrid(0, 2, 2), 1, 2.0);
  pol.alpha_node(1, 1, 0)[0] = -1.0;
  pol.beta_node(1, 0, 1) = 0.5;
  oce::io::write_policy_slices(dir / "policy", pol);
  CHECK(slurp(dir / "policy" / "alpha0_t0001.csv") == "y\\z,0,2\n-1,0,0\n1,-1,0\n");
  CHECK(slurp(dir / "policy" / "beta_t0001.csv") == "y\\z,0,2\n-1,0,0.5\n1,0,0\n");

  const auto meta = oce::io::field_metadata(f);
  CHECK(meta["z_grid"]["n"] == 3);
  CHECK(meta["beta_bound"] == 4.0);
  fs::remove_all(dir);
}
