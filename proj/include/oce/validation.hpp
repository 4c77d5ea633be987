#ifndef OCE_VALIDATION_HPP
#define OCE_VALIDATION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "oce/fields.hpp"
#include "oce/hjb_free.hpp"
#include "oce/hjbi.hpp"
#include "oce/loss.hpp"
#include "oce/oce.hpp"
#include "oce/parallel.hpp"
#include "oce/policy.hpp"
#include "oce/problem.hpp"
#include "oce/scalar_min.hpp"
#include "oce/sde.hpp"

namespace oce {

// ---------------------------------------------------------------------------
// Entropic reduction

/// For the entropic loss, V(t, y, 1) = log inf_alpha E[exp f(Y_T)]: the
/// risk-free problem with terminal e^f, log-transformed. The exponent is
/// shifted by max f on the grid to avoid overflow.
inline ValueField2D entropic_reduction(const ControlProblem& problem, const HjbOptions& opt = {})
{
  const UniformGrid yg(problem.y_box.lo[0], problem.y_box.hi[0], opt.n_y);
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < yg.size(); ++j) shift = std::max(shift, problem.f(yg[j]));
  auto field = solve_hjb(problem, [&](double y) { return std::exp(problem.f(y) - shift); }, opt, "exp(f - max f)");
  for (double& v : field.values) v = std::log(v) + shift;
  field.terminal_desc = "log-transformed risk-free value for exp(f)";
  return field;
}

// ---------------------------------------------------------------------------
// Gaussian expected shortfall

/// mu + sd * pdf(q) / gamma with q the (1 - gamma) standard normal quantile.
inline double avar_gaussian_identity(double mu, double sd, double gamma)
{
  const boost::math::normal_distribution<double> n01;
  const double q = boost::math::quantile(n01, 1.0 - gamma);
  return mu + sd * boost::math::pdf(n01, q) / gamma;
}

/// mu + sd / gamma * int_q^inf x pdf(x) dx by adaptive Gauss-Kronrod.
inline double avar_gaussian_quadrature(double mu, double sd, double gamma)
{
  const boost::math::normal_distribution<double> n01;
  const double q = boost::math::quantile(n01, 1.0 - gamma);
  auto integrand = [&](double x) { return x * boost::math::pdf(n01, x); };
  const double tail = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, q, std::numeric_limits<double>::infinity(), 20, 1e-14);
  return mu + sd * tail / gamma;
}

/// Expected shortfall of N(mu, sd^2) at tail mass gamma. Both routes are
/// evaluated; a disagreement above 1e-10 is an error.
inline double avar_gaussian_oracle(double mu, double sd, double gamma)
{
  if (!(sd > 0.0)) throw std::invalid_argument("avar_gaussian_oracle: sd must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("avar_gaussian_oracle: gamma must lie in (0,1)");
  const double a = avar_gaussian_identity(mu, sd, gamma);
  const double b = avar_gaussian_quadrature(mu, sd, gamma);
  if (std::abs(a - b) > 1e-10 * std::max(1.0, std::abs(a)))
    throw std::runtime_error("avar_gaussian_oracle: quadrature and pdf/quantile identity disagree");
  return a;
}

// ---------------------------------------------------------------------------
// Primal r-sweep

struct RSweepOptions {
  std::size_t n_r = 41;        // first-stage nodes
  std::size_t n_refine = 41;   // second-stage nodes around the first argmin
  double margin = 1.0;         // r range is [min f - margin, max f + margin]
  double polish_tol = 1e-7;    // golden-section polish after stage two; 0 disables
  HjbOptions pde;
};

struct RSweepResult {
  double value = 0.0;
  double r_star = 0.0;
  std::size_t solves = 0;
};

/// V(t, y, z) = inf_r [ w_r(t, y) + r z ] with w_r the risk-free value for
/// terminal l(f - r). Two-stage grid in r, then a short golden-section polish;
/// every evaluation is one risk-free solve.
/// An argmin on the edge of the first-stage grid is an error unless the
/// objective is flat there.
inline RSweepResult r_sweep_oracle(const ControlProblem& problem, const LossSpec& spec, double z, double t0, double y0,
                                   const RSweepOptions& opt = {})
{
  if (opt.n_r < 3 || opt.n_refine < 3) throw std::invalid_argument("r_sweep_oracle: need >= 3 nodes per stage");
  if (!spec.in_domain(z)) throw std::invalid_argument("r_sweep_oracle: z outside dom(l*)");
  const UniformGrid yg(problem.y_box.lo[0], problem.y_box.hi[0], opt.pde.n_y);
  double fmin = std::numeric_limits<double>::infinity(), fmax = -fmin;
  for (std::size_t j = 0; j < yg.size(); ++j) {
    fmin = std::min(fmin, problem.f(yg[j]));
    fmax = std::max(fmax, problem.f(yg[j]));
  }

  auto sweep = [&](const UniformGrid& rg) {
    std::vector<double> obj(rg.size());
    parallel_for(rg.size(), [&](std::size_t q) {
      const double r = rg[q];
      const auto w = solve_hjb(problem, [&](double y) { return spec.l(problem.f(y) - r); }, opt.pde, "l(f - r)");
      obj[q] = w.interpolate(t0, y0) + r * z;
    });
    return obj;
  };
  auto argmin = [](const std::vector<double>& v) {
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
  };

  const UniformGrid stage1(fmin - opt.margin, fmax + opt.margin, opt.n_r);
  const auto obj1 = sweep(stage1);
  const std::size_t k = argmin(obj1);
  const double flat_tol = 1e-9 * (1.0 + std::abs(obj1[k]));
  if ((k == 0 && obj1[0] < obj1[1] - flat_tol) || (k + 1 == obj1.size() && obj1[k] < obj1[k - 1] - flat_tol))
    throw std::runtime_error("r_sweep_oracle: argmin on the r-grid edge; widen the margin");

  const UniformGrid stage2(stage1[k == 0 ? 0 : k - 1], stage1[std::min(k + 1, stage1.size() - 1)], opt.n_refine);
  const auto obj2 = sweep(stage2);
  const std::size_t k2 = argmin(obj2);
  RSweepResult res{obj2[k2], stage2[k2], stage1.size() + stage2.size()};

  // Final polish between the second-stage neighbours of the argmin.
  if (opt.polish_tol > 0.0) {
    std::size_t extra = 0;
    auto objective = [&](double r) {
      ++extra;
      const auto w = solve_hjb(problem, [&](double y) { return spec.l(problem.f(y) - r); }, opt.pde, "l(f - r)");
      return w.interpolate(t0, y0) + r * z;
    };
    const auto m = golden_section_minimize(objective, stage2[k2 == 0 ? 0 : k2 - 1],
                                           stage2[std::min(k2 + 1, stage2.size() - 1)], opt.polish_tol);
    if (m.value < res.value) res = {m.value, m.x, res.solves};
    res.solves += extra;
  }
  if (obj1[k] < res.value) res = {obj1[k], stage1[k], res.solves};
  return res;
}

// ---------------------------------------------------------------------------
// Monte Carlo policy evaluation

struct McResult {
  double oce_value = 0.0;
  double stderr_value = 0.0;
  std::size_t exit_count = 0;
};

/// rho(f(Y_T)) for Y driven by the policy, from n_paths Euler paths; the
/// standard error comes from 20 contiguous sub-ensembles.
template <FeedbackPolicy Policy>
McResult mc_policy_eval(const ControlProblem& problem, const LossSpec& spec, const Policy& policy,
                        const StartPoint& start, std::size_t n_paths, std::size_t n_steps, std::uint64_t seed)
{
  constexpr std::size_t batches = 20;
  if (n_paths < batches) throw std::invalid_argument("mc_policy_eval: need at least 20 paths");
  const auto batch = simulate_y(problem, policy, start, SimParams{n_paths, n_steps, false}, seed);
  std::vector<double> costs(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p)
    costs[p] = problem.terminal(std::span<const double>(batch.y_terminal.data() + p * batch.dim, batch.dim));

  McResult res;
  res.exit_count = batch.exit_count;
  res.oce_value = oce_primal(EmpiricalDistribution::uniform(costs), spec).value;

  std::vector<double> per_batch(batches);
  const std::size_t per = n_paths / batches;
  for (std::size_t b = 0; b < batches; ++b) {
    const auto first = costs.begin() + static_cast<std::ptrdiff_t>(b * per);
    const auto last = b + 1 == batches ? costs.end() : first + static_cast<std::ptrdiff_t>(per);
    per_batch[b] = oce_primal(EmpiricalDistribution::uniform({first, last}), spec).value;
  }
  res.stderr_value = sample_stats(per_batch).stderr_mean;
  return res;
}

// ---------------------------------------------------------------------------
// Structural property scans

struct Violation {
  std::string check;
  bool passed = true;
  double worst = 0.0;     // worst violation amount (<= 0 when comfortably satisfied)
  double tolerance = 0.0;
  double t = 0.0, y = 0.0, z = 0.0;
};

struct PropertyReport {
  std::vector<Violation> checks;

  bool all_passed() const
  {
    return std::all_of(checks.begin(), checks.end(), [](const Violation& v) { return v.passed; });
  }
  const Violation* find(const std::string& name) const
  {
    for (const auto& c : checks)
      if (c.check == name) return &c;
    return nullptr;
  }
};

struct PropertyScanOptions {
  double eps_grid = 0.0;            // refinement-estimated grid error
  double exact_tol = 0.0;           // terminal / z-edge exactness
  double concavity_tol = 1e-4;      // relative to the value scale
  std::vector<const ValueField3D*> beta_scan; // same grid, increasing beta bounds
};

namespace detail {

template <class Fn>
Violation worst_over_nodes(const ValueField3D& f, const std::string& name, double tol, Fn&& excess, bool interior_z,
                           std::size_t t_first = 0, std::size_t t_last = std::numeric_limits<std::size_t>::max())
{
  Violation v{name, true, -std::numeric_limits<double>::infinity(), tol, 0, 0, 0};
  const std::size_t nz = f.z_grid.size();
  t_last = std::min(t_last, f.t_grid.size() - 1);
  for (std::size_t i = t_first; i <= t_last; ++i)
    for (std::size_t j = 0; j < f.y_grid.size(); ++j)
      for (std::size_t k = interior_z ? 1 : 0; k < (interior_z ? nz - 1 : nz); ++k) {
        const double e = excess(i, j, k);
        if (e > v.worst) v = {name, true, e, tol, f.t_grid[i], f.y_grid[j], f.z_grid[k]};
      }
  v.passed = v.worst <= tol;
  return v;
}

} // namespace detail

/// Discrete z-concavity, the z phi - l* lower bound, terminal and z-edge
/// exactness, essential bounds at z = 1 and, given fields for increasing
/// beta bounds, monotonicity in the bound.
inline PropertyReport property_scan(const ValueField3D& field, const ValueField2D& phi, const LossSpec& spec,
                                    const PropertyScanOptions& opt = {})
{
  if (!(phi.t_grid == field.t_grid) || !(phi.y_grid == field.y_grid))
    throw std::invalid_argument("property_scan: phi and field grids differ");
  PropertyReport rep;
  const auto& zg = field.z_grid;
  const std::size_t nz = zg.size(), last = field.t_grid.size() - 1;
  std::vector<double> conj(nz);
  for (std::size_t k = 0; k < nz; ++k) conj[k] = spec.l_conj(zg[k]);
  auto floor_value = [&](std::size_t i, std::size_t j, std::size_t k) { return zg[k] * phi.at(i, j) - conj[k]; };

  rep.checks.push_back(detail::worst_over_nodes(
      field, "terminal exactness", opt.exact_tol,
      [&](std::size_t, std::size_t j, std::size_t k) { return std::abs(field.at(last, j, k) - floor_value(last, j, k)); },
      false, last, last));

  rep.checks.push_back(detail::worst_over_nodes(
      field, "z-edge exactness", opt.exact_tol,
      [&](std::size_t i, std::size_t j, std::size_t k) {
        if (k != 0 && k != nz - 1) return 0.0;
        return std::abs(field.at(i, j, k) - floor_value(i, j, k));
      },
      false));

  rep.checks.push_back(detail::worst_over_nodes(
      field, "lower bound z*phi - l*", opt.eps_grid,
      [&](std::size_t i, std::size_t j, std::size_t k) { return floor_value(i, j, k) - field.at(i, j, k); }, false));

  double scale = 0.0;
  for (double x : field.values) scale = std::max(scale, std::abs(x));
  rep.checks.push_back(detail::worst_over_nodes(
      field, "z-concavity", opt.concavity_tol * scale,
      [&](std::size_t i, std::size_t j, std::size_t k) {
        return field.at(i, j, k + 1) - 2.0 * field.at(i, j, k) + field.at(i, j, k - 1);
      },
      true));

  if (const auto k1 = zg.index_of(1.0, 1e-9)) {
    double fmin = std::numeric_limits<double>::infinity(), fmax = -fmin;
    for (double x : phi.slice(last)) {
      fmin = std::min(fmin, x);
      fmax = std::max(fmax, x);
    }
    rep.checks.push_back(detail::worst_over_nodes(
        field, "essential bounds at z=1", opt.eps_grid,
        [&](std::size_t i, std::size_t j, std::size_t k) {
          if (k != *k1) return -std::numeric_limits<double>::infinity();
          const double v = field.at(i, j, k);
          return std::max(v - fmax, fmin - v);
        },
        false));
  }

  if (opt.beta_scan.size() >= 2) {
    Violation v{"beta-bound monotonicity", true, -std::numeric_limits<double>::infinity(), opt.eps_grid, 0, 0, 0};
    for (std::size_t s = 1; s < opt.beta_scan.size(); ++s) {
      const auto& lo = *opt.beta_scan[s - 1];
      const auto& hi = *opt.beta_scan[s];
      if (lo.values.size() != hi.values.size() || !(lo.beta_bound < hi.beta_bound))
        throw std::invalid_argument("property_scan: beta scan fields must share a grid and increase in the bound");
      for (std::size_t i = 0; i < lo.t_grid.size(); ++i)
        for (std::size_t j = 0; j < lo.y_grid.size(); ++j)
          for (std::size_t k = 0; k < nz; ++k) {
            const double e = lo.at(i, j, k) - hi.at(i, j, k);
            if (e > v.worst) v = {v.check, true, e, opt.eps_grid, lo.t_grid[i], lo.y_grid[j], zg[k]};
          }
    }
    v.passed = v.worst <= opt.eps_grid;
    rep.checks.push_back(v);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Grid refinement

/// Coarse grid with every other node of the given one; all counts must be odd.
inline HjbiOptions coarsened(const HjbiOptions& fine)
{
  if (fine.n_t % 2 == 0 || fine.n_y % 2 == 0 || fine.n_z % 2 == 0)
    throw std::invalid_argument("coarsened: node counts must be odd so the coarse grid nests");
  HjbiOptions c = fine;
  c.n_t = (fine.n_t - 1) / 2 + 1;
  c.n_y = (fine.n_y - 1) / 2 + 1;
  c.n_z = (fine.n_z - 1) / 2 + 1;
  c.extract_policy = false;
  return c;
}

/// eps_grid: max |V_h - V_2h| over the nodes shared by the fine field and a
/// solve on the nested coarse grid. For a first-order scheme this is the
/// usual estimate of the fine-grid error.
inline double refinement_error(const ValueField3D& fine, const ControlProblem& problem, const LossSpec& spec,
                               const HjbiOptions& fine_opt)
{
  auto copt = coarsened(fine_opt);
  copt.beta_bound = fine.beta_bound;
  const auto coarse = solve_hjbi(problem, spec, copt);
  double worst = 0.0;
  for (std::size_t i = 0; i < copt.n_t; ++i)
    for (std::size_t j = 0; j < copt.n_y; ++j)
      for (std::size_t k = 0; k < copt.n_z; ++k)
        worst = std::max(worst, std::abs(coarse.field.at(i, j, k) - fine.at(2 * i, 2 * j, 2 * k)));
  return worst;
}

/// Largest |a - b| over a field and its DPP restart on their common slices.
inline double max_abs_deviation(const ValueField3D& a, const ValueField3D& b)
{
  const std::size_t n = std::min(a.values.size(), b.values.size());
  double worst = 0.0;
  for (std::size_t q = 0; q < n; ++q) worst = std::max(worst, std::abs(a.values[q] - b.values[q]));
  return worst;
}

/// |a - b| <= rel * max(|a|, |b|) + abs_floor.
inline bool close_relative(double a, double b, double rel, double abs_floor = 1e-8)
{
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

} // namespace oce

#endif // OCE_VALIDATION_HPP
