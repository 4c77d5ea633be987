#ifndef OCE_SUITE_HPP
#define OCE_SUITE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oce/config.hpp"
#include "oce/hjbi.hpp"
#include "oce/io.hpp"
#include "oce/validation.hpp"

namespace oce {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;
  PropertyReport properties;
  double eps_grid = 0.0;
  HjbiStats stats;

  bool all_passed() const
  {
    return properties.all_passed()
           && std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
};

inline nlohmann::json to_json(const SuiteReport& rep)
{
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"check", c.name},
                      {"passed", c.passed},
                      {"value", c.value},
                      {"reference", c.reference},
                      {"tolerance", c.tolerance},
                      {"detail", c.detail}});
  return {{"suite", rep.suite},
          {"all_passed", rep.all_passed()},
          {"eps_grid", rep.eps_grid},
          {"checks", checks},
          {"properties", io::to_json(rep.properties)},
          {"solver", io::to_json(rep.stats)}};
}

namespace detail {

inline CheckResult relative_check(std::string name, double value, double reference, double rel, std::string detail = {})
{
  const double tol = rel * std::max(std::abs(value), std::abs(reference)) + 1e-8;
  return {std::move(name), std::abs(value - reference) <= tol, value, reference, tol, std::move(detail)};
}

/// Uncontrolled problem with constant drift and (clamped-)linear terminal:
/// f(Y_T) is Gaussian up to the clamp. Returns slope, mean and sd of the
/// unclamped linear part.
inline std::optional<std::array<double, 2>> gaussian_terminal(const RunConfig& c)
{
  if (c.control_lo != c.control_hi) return std::nullopt;
  double mu = 0.0;
  if (c.drift.name == "constant")
    mu = param(c.drift, "mu", "problem.drift", 0.0);
  else if (c.drift.name == "shifted_control")
    mu = param(c.drift, "mu", "problem.drift", 0.0) + c.control_lo;
  else
    return std::nullopt;
  double slope = 1.0, intercept = 0.0;
  if (c.terminal.name == "linear") {
    slope = param(c.terminal, "slope", "problem.terminal", 1.0);
    intercept = param(c.terminal, "intercept", "problem.terminal", 0.0);
  } else if (c.terminal.name == "clamped_linear") {
    slope = param(c.terminal, "slope", "problem.terminal", 1.0);
  } else {
    return std::nullopt;
  }
  if (slope == 0.0) return std::nullopt;
  const double mean = intercept + slope * (c.y0 + mu * c.horizon);
  const double sd = std::abs(slope) * c.sigma * std::sqrt(c.horizon);
  return std::array<double, 2>{mean, sd};
}

} // namespace detail

/// Solves the configured problem and runs the named check suite:
/// "structural" (exactness, bounds, concavity, DPP restart), "oracles"
/// (closed forms where available, r-sweep, Monte Carlo closure) or "full".
inline SuiteReport run_suite(const RunConfig& cfg)
{
  const auto problem = cfg.problem();
  const auto spec = cfg.loss_spec();
  const auto opt = cfg.hjbi_options();
  const auto sol = solve_hjbi(problem, spec, opt);
  const auto& V = sol.field;

  SuiteReport rep;
  rep.suite = cfg.suite;
  rep.stats = sol.stats;
  const bool structural = cfg.suite != "oracles";
  const bool oracles = cfg.suite != "structural";

  bool nested = opt.n_t % 2 == 1 && opt.n_y % 2 == 1 && opt.n_z % 2 == 1;
  rep.eps_grid = nested ? refinement_error(V, problem, spec, opt) : 0.0;

  if (structural) {
    double scale = 0.0;
    for (double x : V.values) scale = std::max(scale, std::abs(x));
    PropertyScanOptions popt;
    popt.eps_grid = rep.eps_grid;
    popt.exact_tol = 1e-12 * (1.0 + scale);
    popt.concavity_tol = opt.concavity_tol;
    rep.properties = property_scan(V, *V.phi, spec, popt);
    if (!nested) rep.checks.push_back({"refinement estimate", false, 0, 0, 0, "node counts must be odd to nest grids"});

    const double theta = 0.5 * problem.horizon;
    if (V.t_grid.index_of(theta, 1e-9)) {
      const auto restarted = dpp_restart(V, problem, spec, theta, opt);
      const double dev = max_abs_deviation(restarted, V);
      rep.checks.push_back({"dpp restart at T/2", dev <= 2.0 * rep.eps_grid, dev, 0.0, 2.0 * rep.eps_grid,
                            "max |V_restart - V| on [0, T/2]"});
    }
  }

  if (oracles) {
    for (double z : cfg.z_checks) {
      const double v = V.interpolate(0.0, cfg.y0, z);
      const std::string at = "z=" + io::format_double(z);
      if (spec.name == "entropic") {
        const auto red = entropic_reduction(problem, cfg.hjb_options());
        const double psi = red.interpolate(0.0, cfg.y0);
        rep.checks.push_back(detail::relative_check("entropic reduction " + at, v, z * psi - spec.l_conj(z), 0.02,
                                                    "z * log inf E exp f - l*(z)"));
      }
      if (spec.name == "avar") {
        if (const auto g = detail::gaussian_terminal(cfg)) {
          const double gamma = spec.params.at(0);
          const double tail = std::min(gamma * z, 1.0);
          const double es = tail < 1.0 ? avar_gaussian_oracle((*g)[0], (*g)[1], tail) : (*g)[0];
          rep.checks.push_back(detail::relative_check("gaussian expected shortfall " + at, v, z * es, 0.02,
                                                      "z * ES at tail mass gamma z"));
        }
      }
      RSweepOptions ropt;
      ropt.pde = cfg.hjb_options();
      const auto sweep = r_sweep_oracle(problem, spec, z, 0.0, cfg.y0, ropt);
      rep.checks.push_back(detail::relative_check("r-sweep " + at, v, sweep.value, 0.02,
                                                  "r* = " + io::format_double(sweep.r_star)));
    }

    if (1.0 >= V.z_grid.lo() && 1.0 <= V.z_grid.hi()) {
      const double v1 = V.interpolate(0.0, cfg.y0, 1.0);
      const auto mc = mc_policy_eval(problem, spec, sol.policy, StartPoint{0.0, {cfg.y0}, 1.0}, cfg.paths, cfg.steps,
                                     cfg.seed);
      const double tol = std::max(0.02 * std::abs(v1), 3.0 * mc.stderr_value) + 1e-8;
      rep.checks.push_back({"monte carlo closure", std::abs(mc.oce_value - v1) <= tol, mc.oce_value, v1, tol,
                            "stderr " + io::format_double(mc.stderr_value)});
    }
  }
  return rep;
}

struct BetaSweepRow {
  double beta_bound = 0.0;
  std::vector<double> values; // V(0, y0, z) per z check
  std::size_t substeps = 0;
};

struct BetaSweep {
  std::vector<BetaSweepRow> rows;
  double worst_decrease = 0.0; // max over nodes of V_n - V_{n'} for n < n'
  bool monotone = true;
};

/// Solves for each beta bound and compares consecutive fields node by node.
inline BetaSweep run_beta_sweep(const RunConfig& cfg, const std::vector<double>& bounds, double eps_grid)
{
  const auto problem = cfg.problem();
  const auto spec = cfg.loss_spec();
  auto opt = cfg.hjbi_options();
  opt.extract_policy = false;
  HjbOptions hopt = cfg.hjb_options();
  auto phi = std::make_shared<const ValueField2D>(solve_hjb(problem, [&](double y) { return problem.f(y); }, hopt, "f"));

  BetaSweep out;
  std::optional<ValueField3D> prev;
  for (double n : bounds) {
    opt.beta_bound = n;
    auto sol = solve_hjbi(problem, spec, phi, opt);
    BetaSweepRow row{n, {}, sol.stats.substeps};
    for (double z : cfg.z_checks) row.values.push_back(sol.field.interpolate(0.0, cfg.y0, z));
    out.rows.push_back(std::move(row));
    if (prev) {
      for (std::size_t q = 0; q < prev->values.size(); ++q)
        out.worst_decrease = std::max(out.worst_decrease, prev->values[q] - sol.field.values[q]);
    }
    prev = std::move(sol.field);
  }
  out.monotone = out.worst_decrease <= eps_grid;
  return out;
}

} // namespace oce

#endif // OCE_SUITE_HPP
