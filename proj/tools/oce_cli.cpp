// Command-line front end: one subcommand per module, JSON config in,
// CSV/JSON out, plus a manifest per run.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oce/config.hpp"
#include "oce/hjb_free.hpp"
#include "oce/hjbi.hpp"
#include "oce/io.hpp"
#include "oce/loss.hpp"
#include "oce/oce.hpp"
#include "oce/parallel.hpp"
#include "oce/sde.hpp"
#include "oce/suite.hpp"
#include "oce/validation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Common {
  std::string config;
  std::string out;
  int workers = -1;
  std::optional<std::uint64_t> seed;
};

struct Run {
  std::string subcommand;
  fs::path out_dir;
  json config_echo;
  std::uint64_t seed = 0;
  std::size_t substeps = 0;
  std::vector<std::string> files;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void record(const fs::path& p) { files.push_back(fs::relative(p, out_dir).generic_string()); }

  void write_manifest() const
  {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    json m = {{"subcommand", subcommand},
              {"config", config_echo},
              {"seed", seed},
              {"versions", {{"oce", kVersion}, {"compiler", __VERSION__}, {"cplusplus", __cplusplus}}},
              {"workers", oce::workers()},
              {"substeps", substeps},
              {"files", files},
              {"finished_at", stamp},
              {"wall_seconds",
               std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
    oce::io::write_json(out_dir / "manifest.json", m);
  }
};

void apply_workers(int flag)
{
  int n = flag;
  if (n < 0) {
    if (const char* env = std::getenv("OCE_WORKERS")) {
      try {
        n = std::stoi(env);
      } catch (const std::exception&) {
        throw oce::ConfigError("OCE_WORKERS", "expected an integer");
      }
    }
  }
  if (n >= 0) oce::set_workers(n);
}

oce::RunConfig load(const Common& c)
{
  if (c.config.empty()) throw oce::ConfigError("--config", "required");
  auto cfg = oce::load_config(c.config);
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

Run begin(const std::string& name, const fs::path& out, const json& echo, std::uint64_t seed)
{
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw oce::ConfigError("output_dir", "cannot create " + out.string());
  Run r;
  r.subcommand = name;
  r.out_dir = out;
  r.config_echo = echo;
  r.seed = seed;
  return r;
}

// ---------------------------------------------------------------------------

int cmd_check_loss(const Common& c)
{
  const auto cfg = load(c);
  auto run = begin("check-loss", cfg.output_dir, cfg.source, cfg.seed);
  const auto spec = cfg.loss_spec();
  std::vector<double> xs, zs;
  for (int i = 0; i <= 400; ++i) xs.push_back(-10.0 + 0.05 * i);
  const double z_lo = std::max(spec.conj_domain.lo, 0.01);
  const double z_hi = std::isfinite(spec.conj_domain.hi) ? spec.conj_domain.hi : 8.0;
  for (int i = 0; i < 100; ++i) zs.push_back(z_lo + (z_hi - z_lo) * i / 99.0);
  const auto rep = oce::check_assumptions(spec, xs, zs, 1e-9);
  for (const auto& cl : rep.clauses)
    std::cout << (cl.passed ? "ok   " : "FAIL ") << cl.clause << "  (" << oce::io::format_double(cl.worst) << ")\n";
  const fs::path p = run.out_dir / "check_loss.json";
  oce::io::write_json(p, oce::io::to_json(rep));
  run.record(p);
  run.write_manifest();
  return rep.all_passed() ? 0 : 1;
}

int cmd_oce(const Common& c)
{
  if (c.config.empty()) throw oce::ConfigError("--config", "required");
  std::ifstream in(c.config);
  if (!in) throw oce::ConfigError("--config", "cannot open " + c.config);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw oce::ConfigError("--config", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.contains("outcomes") || !doc.at("outcomes").is_array()) throw oce::ConfigError("outcomes", "expected an array");
  std::vector<double> xs = doc.at("outcomes").get<std::vector<double>>();
  std::vector<double> ws;
  if (doc.contains("weights")) ws = doc.at("weights").get<std::vector<double>>();
  else ws.assign(xs.size(), xs.empty() ? 0.0 : 1.0 / static_cast<double>(xs.size()));

  const auto spec = oce::parse_loss(doc);

  oce::EmpiricalDistribution dist(xs, ws);
  const auto primal = oce::oce_primal(dist, spec);
  const double dual = oce::oce_dual_discrete(dist, spec);
  std::cout << "value " << oce::io::format_double(primal.value) << "\n"
            << "r_star " << oce::io::format_double(primal.r_star) << "\n"
            << "dual " << oce::io::format_double(dual) << "\n";
  if (!c.out.empty()) {
    auto run = begin("oce", c.out, doc, 0);
    const fs::path p = run.out_dir / "oce.json";
    oce::io::write_json(p, {{"value", primal.value}, {"r_star", primal.r_star}, {"dual", dual}});
    run.record(p);
    run.write_manifest();
  }
  return 0;
}

int cmd_solve_free(const Common& c)
{
  const auto cfg = load(c);
  auto run = begin("solve-free", cfg.output_dir, cfg.source, cfg.seed);
  const auto problem = cfg.problem();
  const auto phi = oce::solve_hjb(problem, [&](double y) { return problem.f(y); }, cfg.hjb_options(), "f");
  run.substeps = phi.substeps;
  const fs::path csv = run.out_dir / "phi.csv";
  oce::io::write_field_csv(csv, phi);
  run.record(csv);
  auto meta = oce::io::field_metadata(phi);
  meta["phi_at_start"] = phi.interpolate(0.0, cfg.y0);
  const fs::path js = run.out_dir / "phi.json";
  oce::io::write_json(js, meta);
  run.record(js);
  std::cout << "phi(0, " << oce::io::format_double(cfg.y0) << ") = " << oce::io::format_double(meta["phi_at_start"])
            << "\n";
  run.write_manifest();
  return 0;
}

int cmd_solve(const Common& c, std::size_t t_stride)
{
  const auto cfg = load(c);
  auto run = begin("solve", cfg.output_dir, cfg.source, cfg.seed);
  const auto problem = cfg.problem();
  const auto spec = cfg.loss_spec();
  const auto sol = oce::solve_hjbi(problem, spec, cfg.hjbi_options());
  run.substeps = sol.stats.substeps;

  oce::io::write_field_slices(run.out_dir / "value", sol.field, t_stride);
  oce::io::write_policy_slices(run.out_dir / "policy", sol.policy, t_stride);
  oce::io::write_field_csv(run.out_dir / "phi.csv", *sol.field.phi);
  run.files.push_back("value/");
  run.files.push_back("policy/");
  run.record(run.out_dir / "phi.csv");

  auto meta = oce::io::field_metadata(sol.field);
  meta["solver"] = oce::io::to_json(sol.stats);
  json at = json::array();
  for (double z : cfg.z_checks) {
    const double v = sol.field.interpolate(0.0, cfg.y0, z);
    at.push_back({{"z", z}, {"value", v}});
    std::cout << "V(0, " << oce::io::format_double(cfg.y0) << ", " << oce::io::format_double(z)
              << ") = " << oce::io::format_double(v) << "\n";
  }
  meta["values_at_start"] = at;
  oce::io::write_json(run.out_dir / "solve.json", meta);
  run.record(run.out_dir / "solve.json");
  for (const auto& w : sol.stats.warnings) std::cerr << "warning: " << w << "\n";
  run.write_manifest();
  return 0;
}

int cmd_simulate(const Common& c, const std::string& policy_kind, double alpha, std::optional<std::size_t> paths,
                 std::optional<std::size_t> steps)
{
  const auto cfg = load(c);
  auto run = begin("simulate", cfg.output_dir, cfg.source, cfg.seed);
  const auto problem = cfg.problem();
  const auto spec = cfg.loss_spec();
  const oce::SimParams params{paths.value_or(cfg.paths), steps.value_or(cfg.steps), false};
  const oce::StartPoint start{0.0, {cfg.y0}, 1.0};

  oce::PathBatch batch;
  if (policy_kind == "optimal") {
    const auto sol = oce::solve_hjbi(problem, spec, cfg.hjbi_options());
    run.substeps = sol.stats.substeps;
    batch = oce::simulate_y(problem, sol.policy, start, params, cfg.seed);
  } else if (policy_kind == "free") {
    const auto phi = oce::solve_hjb(problem, [&](double y) { return problem.f(y); }, cfg.hjb_options(), "f");
    run.substeps = phi.substeps;
    batch = oce::simulate_y(problem, oce::extract_policy_2d(phi, problem), start, params, cfg.seed);
  } else if (policy_kind == "constant") {
    if (!problem.control_box.contains(std::vector<double>{alpha}))
      throw oce::ConfigError("--alpha", "outside problem.control_box");
    batch = oce::simulate_y(problem, oce::PolicyField::constant({alpha}, 0.0, problem.horizon), start, params, cfg.seed);
  } else {
    throw oce::ConfigError("--policy", "expected optimal, free or constant");
  }

  std::vector<double> costs(batch.n_paths);
  const fs::path csv = run.out_dir / "terminal.csv";
  {
    auto out = oce::io::open_for_write(csv);
    out << "path,y_T,f\n";
    for (std::size_t p = 0; p < batch.n_paths; ++p) {
      const double y = batch.y_terminal[p];
      costs[p] = problem.f(y);
      out << p << ',' << oce::io::format_double(y) << ',' << oce::io::format_double(costs[p]) << '\n';
    }
  }
  run.record(csv);
  const auto st = oce::sample_stats(costs);
  const auto rho = oce::oce_primal(oce::EmpiricalDistribution::uniform(costs), spec);
  json summary = {{"paths", batch.n_paths},  {"steps", batch.n_steps},         {"seed", cfg.seed},
                  {"policy", policy_kind},   {"mean", st.mean},                {"variance", st.variance},
                  {"stderr", st.stderr_mean}, {"oce_value", rho.value},        {"r_star", rho.r_star},
                  {"exit_count", batch.exit_count}};
  oce::io::write_json(run.out_dir / "summary.json", summary);
  run.record(run.out_dir / "summary.json");
  std::cout << "oce " << oce::io::format_double(rho.value) << "  mean " << oce::io::format_double(st.mean)
            << "  stderr " << oce::io::format_double(st.stderr_mean) << "\n";
  run.write_manifest();
  return 0;
}

int cmd_validate(const Common& c)
{
  const auto cfg = load(c);
  auto run = begin("validate", cfg.output_dir, cfg.source, cfg.seed);
  const auto rep = oce::run_suite(cfg);
  run.substeps = rep.stats.substeps;
  for (const auto& p : rep.properties.checks)
    std::cout << (p.passed ? "ok   " : "FAIL ") << p.check << "  worst " << oce::io::format_double(p.worst)
              << "  tol " << oce::io::format_double(p.tolerance) << "\n";
  for (const auto& k : rep.checks)
    std::cout << (k.passed ? "ok   " : "FAIL ") << k.name << "  " << oce::io::format_double(k.value) << " vs "
              << oce::io::format_double(k.reference) << "  tol " << oce::io::format_double(k.tolerance) << "\n";
  std::cout << "eps_grid " << oce::io::format_double(rep.eps_grid) << "\n";
  oce::io::write_json(run.out_dir / "report.json", oce::to_json(rep));
  run.record(run.out_dir / "report.json");
  run.write_manifest();
  return rep.all_passed() ? 0 : 1;
}

int cmd_sweep(const Common& c, std::vector<double> bounds)
{
  const auto cfg = load(c);
  auto run = begin("sweep", cfg.output_dir, cfg.source, cfg.seed);
  const auto problem = cfg.problem();
  const auto spec = cfg.loss_spec();
  auto opt = cfg.hjbi_options();
  opt.beta_bound = *std::max_element(bounds.begin(), bounds.end());
  opt.extract_policy = false;
  const auto ref = oce::solve_hjbi(problem, spec, opt);
  const double eps = oce::refinement_error(ref.field, problem, spec, opt);

  std::sort(bounds.begin(), bounds.end());
  const auto sweep = oce::run_beta_sweep(cfg, bounds, eps);
  const fs::path csv = run.out_dir / "sweep.csv";
  {
    auto out = oce::io::open_for_write(csv);
    out << "beta_bound";
    for (double z : cfg.z_checks) out << ",V_z" << oce::io::format_double(z);
    out << ",substeps\n";
    for (const auto& row : sweep.rows) {
      out << oce::io::format_double(row.beta_bound);
      for (double v : row.values) out << ',' << oce::io::format_double(v);
      out << ',' << row.substeps << '\n';
      run.substeps += row.substeps;
    }
  }
  run.record(csv);
  oce::io::write_json(run.out_dir / "sweep.json",
                      {{"eps_grid", eps}, {"worst_decrease", sweep.worst_decrease}, {"monotone", sweep.monotone}});
  run.record(run.out_dir / "sweep.json");
  std::cout << (sweep.monotone ? "ok   " : "FAIL ") << "monotone in beta bound: worst decrease "
            << oce::io::format_double(sweep.worst_decrease) << " vs eps_grid " << oce::io::format_double(eps) << "\n";
  run.write_manifest();
  return sweep.monotone ? 0 : 1;
}

void add_common(CLI::App* sub, Common& c, bool needs_config = true)
{
  auto* opt = sub->add_option("--config", c.config, "JSON run configuration");
  if (needs_config) opt->required();
  sub->add_option("--out", c.out, "output directory (overrides output_dir)");
  sub->add_option("--workers", c.workers, "worker threads (default: OCE_WORKERS or all cores)");
  sub->add_option("--seed", c.seed, "random seed (overrides the config)");
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Risk-sensitive control with OCE risk measures"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  std::size_t t_stride = 1;
  std::string policy_kind = "optimal";
  double alpha = 0.0;
  std::optional<std::size_t> paths, steps;
  std::vector<double> bounds{2, 4, 8, 16};

  auto* check = app.add_subcommand("check-loss", "check the loss assumptions and conjugate");
  add_common(check, common);
  auto* oce_cmd = app.add_subcommand("oce", "OCE of an empirical distribution");
  add_common(oce_cmd, common);
  auto* free = app.add_subcommand("solve-free", "risk-free HJB value phi");
  add_common(free, common);
  auto* solve = app.add_subcommand("solve", "HJBI value and policy on (t, y, z)");
  add_common(solve, common);
  solve->add_option("--t-stride", t_stride, "write every k-th time slice")->check(CLI::PositiveNumber);
  auto* sim = app.add_subcommand("simulate", "Monte Carlo paths under a policy");
  add_common(sim, common);
  sim->add_option("--policy", policy_kind, "optimal, free or constant");
  sim->add_option("--alpha", alpha, "control value for --policy constant");
  sim->add_option("--paths", paths, "number of paths");
  sim->add_option("--steps", steps, "Euler steps per path");
  auto* val = app.add_subcommand("validate", "run a check suite; nonzero exit on failure");
  add_common(val, common);
  auto* sweep = app.add_subcommand("sweep", "beta-bound scan and monotonicity table");
  add_common(sweep, common);
  sweep->add_option("--bounds", bounds, "beta bounds to scan")->expected(1, -1);

  CLI11_PARSE(app, argc, argv);

  try {
    apply_workers(common.workers);
    if (*check) return cmd_check_loss(common);
    if (*oce_cmd) return cmd_oce(common);
    if (*free) return cmd_solve_free(common);
    if (*solve) return cmd_solve(common, t_stride);
    if (*sim) return cmd_simulate(common, policy_kind, alpha, paths, steps);
    if (*val) return cmd_validate(common);
    if (*sweep) return cmd_sweep(common, bounds);
  } catch (const oce::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const oce::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
