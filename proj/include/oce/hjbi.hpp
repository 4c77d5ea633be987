#ifndef OCE_HJBI_HPP
#define OCE_HJBI_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oce/fields.hpp"
#include "oce/hjb_free.hpp"
#include "oce/loss.hpp"
#include "oce/parallel.hpp"
#include "oce/policy.hpp"
#include "oce/problem.hpp"

namespace oce {

struct AdversaryChoice {
  double value = 0.0;
  double beta = 0.0;
};

/// sup over |beta| <= n of g(beta) = 1/2 z^2 beta^2 v_zz + z sigma v_yz beta.
/// Concave g peaks at -sigma v_yz / (z v_zz), clamped to the bound; otherwise
/// the maximum sits at the bound in the direction of sigma v_yz (+n on ties).
inline AdversaryChoice adversary_sup(double v_zz, double v_yz, double z, double sigma, double beta_bound)
{
  double beta;
  if (v_zz < 0.0) {
    beta = std::clamp(-sigma * v_yz / (z * v_zz), -beta_bound, beta_bound);
  } else {
    beta = sigma * v_yz >= 0.0 ? beta_bound : -beta_bound;
  }
  const double value = 0.5 * z * z * beta * beta * v_zz + z * sigma * v_yz * beta;
  return {value, beta};
}

/// The derivative symbols entering the HJBI Hamiltonian at one node.
struct HamiltonianInput {
  double p_y_plus = 0.0;  // forward difference in y
  double p_y_minus = 0.0; // backward difference in y
  double v_yy = 0.0;
  double v_zz = 0.0;
  double v_yz = 0.0;
  double t = 0.0, y = 0.0, z = 0.0;
};

struct HjbiOptions {
  std::size_t n_t = 201;
  std::size_t n_y = 201;
  std::size_t n_z = 81;
  double beta_bound = 8.0;
  double cfl_safety = 0.8;
  double concavity_tol = 1e-4; // relative to the value scale
  std::size_t controls_per_dim = 33;
  DriftStencil stencil = DriftStencil::hybrid;
  bool extract_policy = true;
};

struct HjbiStats {
  std::size_t substeps = 0;
  double max_rate = 0.0;          // largest frozen-coefficient CFL rate met
  std::size_t saturated_nodes = 0; // node visits with |beta*| at the bound (sum over sub-steps)
  double max_concavity_violation = 0.0;
  double value_scale = 0.0;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
};

struct HjbiSolution {
  ValueField3D field;
  PolicyField policy;
  HjbiStats stats;
};

namespace detail {

/// Finite differences at (j, k) of one (y, z) slice stored y-major.
/// Second derivatives at a y edge come from the adjacent row; at a z edge
/// from the adjacent interior column.
inline HamiltonianInput node_derivatives(std::span<const double> v, std::size_t j, std::size_t k, std::size_t ny,
                                         std::size_t nz, double dy, double dz)
{
  HamiltonianInput h;
  const auto col = v.subspan(k);
  const auto [dp, dm] = y_differences(col, j, nz, ny, dy);
  h.p_y_plus = dp;
  h.p_y_minus = dm;
  h.v_yy = y_second_difference(col, j, nz, ny, dy);

  const std::size_t kc = std::clamp<std::size_t>(k, 1, nz - 2);
  auto at = [&](std::size_t jj, std::size_t kk) { return v[jj * nz + kk]; };
  h.v_zz = (at(j, kc + 1) - 2.0 * at(j, kc) + at(j, kc - 1)) / (dz * dz);
  if (j > 0 && j + 1 < ny) {
    h.v_yz = (at(j + 1, kc + 1) - at(j + 1, kc - 1) - at(j - 1, kc + 1) + at(j - 1, kc - 1)) / (4.0 * dy * dz);
  } else {
    const std::size_t j0 = j == 0 ? 0 : j - 1;
    const std::size_t j1 = j0 + 1;
    h.v_yz = (at(j1, kc + 1) - at(j1, kc - 1) - at(j0, kc + 1) + at(j0, kc - 1)) / (2.0 * dy * dz);
  }
  return h;
}

struct Grids {
  UniformGrid t, y, z;
};

inline Grids make_grids(const ControlProblem& problem, const HjbiOptions& opt)
{
  if (opt.n_t < 2 || opt.n_y < 3 || opt.n_z < 3)
    throw std::invalid_argument("solve_hjbi: need n_t >= 2, n_y >= 3, n_z >= 3");
  return {UniformGrid(0.0, problem.horizon, opt.n_t), UniformGrid(problem.y_box.lo[0], problem.y_box.hi[0], opt.n_y),
          UniformGrid(problem.z_box.lo, problem.z_box.hi, opt.n_z)};
}

/// Marches field slices i_top-1, ..., 0 from slice i_top, which must be filled.
inline void march_hjbi(const ControlProblem& problem, const LossSpec& spec, const ValueField2D& phi,
                       ValueField3D& field, std::size_t i_top, const HjbiOptions& opt, HjbiStats& stats)
{
  const auto& tg = field.t_grid;
  const auto& yg = field.y_grid;
  const auto& zg = field.z_grid;
  const std::size_t ny = yg.size(), nz = zg.size();
  const double dy = yg.step(), dz = zg.step();
  const double sigma = problem.sigma_scalar();
  const double half_s2 = 0.5 * sigma * sigma;
  const double n = field.beta_bound;

  ControlTable table(problem, yg, opt.controls_per_dim);
  const double central = central_drift_limit(opt.stencil, sigma, dy);
  std::vector<double> conj(nz);
  for (std::size_t k = 0; k < nz; ++k) conj[k] = spec.l_conj(zg[k]);
  const double z_lo = zg[0], z_hi = zg[nz - 1];

  std::vector<double> v(field.slice(i_top).begin(), field.slice(i_top).end());
  std::vector<double> ham(ny * nz, 0.0), rate(ny, 0.0);
  std::vector<std::size_t> saturated(ny, 0);

  for (std::size_t i = i_top; i-- > 0;) {
    const double t_hi = tg[i + 1], t_lo = tg[i];
    const double span_t = t_hi - t_lo;
    double remaining = span_t;
    double t_cur = t_hi;
    while (remaining > 0.0) {
      table.refresh(t_cur);
      const double drift_rate = table.max_abs_drift() / dy;
      parallel_for(ny, [&](std::size_t j) {
        double r = 0.0;
        std::size_t sat = 0;
        for (std::size_t k = 1; k + 1 < nz; ++k) {
          const auto h = node_derivatives(v, j, k, ny, nz, dy, dz);
          const double z = zg[k];
          const auto adv = adversary_sup(h.v_zz, h.v_yz, z, sigma, n);
          const double inf_drift = drift_infimum(table.row(j), h.p_y_plus, h.p_y_minus, central).first;
          ham[j * nz + k] = inf_drift + half_s2 * h.v_yy + adv.value;
          const double s = sigma / dy + z * std::abs(adv.beta) / dz;
          r = std::max(r, s * s);
          if (std::abs(adv.beta) >= n) ++sat;
        }
        rate[j] = r;
        saturated[j] = sat;
      });
      double max_rate = 0.0;
      for (std::size_t j = 0; j < ny; ++j) {
        max_rate = std::max(max_rate, rate[j]);
        stats.saturated_nodes += saturated[j];
      }
      max_rate += drift_rate;
      stats.max_rate = std::max(stats.max_rate, max_rate);

      const double dt_allowed = opt.cfl_safety / max_rate;
      const auto m = static_cast<std::size_t>(std::max(1.0, std::ceil(remaining / dt_allowed)));
      const bool last = m == 1;
      const double dt = last ? remaining : remaining / static_cast<double>(m);

      parallel_for(ny, [&](std::size_t j) {
        for (std::size_t k = 1; k + 1 < nz; ++k) v[j * nz + k] += dt * ham[j * nz + k];
      });
      remaining = last ? 0.0 : remaining - dt;
      t_cur = last ? t_lo : t_cur - dt;

      // z edges: z phi(t, y) - l*(z), phi linear in t between grid slices.
      const double w = last ? 0.0 : (t_cur - t_lo) / span_t;
      for (std::size_t j = 0; j < ny; ++j) {
        const double ph = last ? phi.at(i, j) : (1.0 - w) * phi.at(i, j) + w * phi.at(i + 1, j);
        v[j * nz] = z_lo * ph - conj[0];
        v[j * nz + nz - 1] = z_hi * ph - conj[nz - 1];
      }
      ++stats.substeps;
    }
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t k = 0; k < nz; ++k)
        if (!std::isfinite(v[j * nz + k])) throw NumericalError("solve_hjbi: non-finite value", t_lo, yg[j], zg[k]);
    std::copy(v.begin(), v.end(), field.slice(i).begin());
  }
}

inline void fill_terminal(const ControlProblem& problem, const LossSpec& spec, ValueField3D& field, std::size_t i)
{
  const auto& yg = field.y_grid;
  const auto& zg = field.z_grid;
  for (std::size_t j = 0; j < yg.size(); ++j) {
    const double fy = problem.f(yg[j]);
    for (std::size_t k = 0; k < zg.size(); ++k) field.at(i, j, k) = zg[k] * fy - spec.l_conj(zg[k]);
  }
}

inline void concavity_diagnostics(const ValueField3D& field, const HjbiOptions& opt, HjbiStats& stats)
{
  double scale = 0.0;
  for (double x : field.values) scale = std::max(scale, std::abs(x));
  double worst = 0.0;
  const std::size_t nz = field.z_grid.size();
  for (std::size_t i = 0; i < field.t_grid.size(); ++i)
    for (std::size_t j = 0; j < field.y_grid.size(); ++j)
      for (std::size_t k = 1; k + 1 < nz; ++k)
        worst = std::max(worst, field.at(i, j, k + 1) - 2.0 * field.at(i, j, k) + field.at(i, j, k - 1));
  stats.value_scale = scale;
  stats.max_concavity_violation = worst;
  if (worst > opt.concavity_tol * std::max(scale, 1e-300))
    stats.warnings.push_back("z-concavity violated: max second difference " + std::to_string(worst)
                             + " exceeds " + std::to_string(opt.concavity_tol) + " * scale "
                             + std::to_string(scale));
}

inline void check_inputs(const ControlProblem& problem, const LossSpec& spec, const ValueField2D& phi,
                         const Grids& g)
{
  const auto rep = check_problem(problem, spec, 200);
  if (!rep.ok()) throw std::invalid_argument("solve_hjbi: " + rep.errors.front());
  if (!(phi.t_grid == g.t) || !(phi.y_grid == g.y))
    throw std::invalid_argument("solve_hjbi: phi must be sampled on the solver's (t, y) grid");
  if (!std::isfinite(spec.l_conj(g.z[0])) || !std::isfinite(spec.l_conj(g.z[g.z.size() - 1])))
    throw std::invalid_argument("solve_hjbi: l* is infinite on the z grid");
}

} // namespace detail

/// Feedback readout of a solved field: alpha* minimises the upwinded drift
/// term and beta* solves the adversary problem at every node.
inline PolicyField extract_policy_3d(const ValueField3D& field, const ControlProblem& problem,
                                     std::size_t controls_per_dim = 33,
                                     DriftStencil stencil = DriftStencil::hybrid)
{
  const auto& tg = field.t_grid;
  const auto& yg = field.y_grid;
  const auto& zg = field.z_grid;
  const std::size_t ny = yg.size(), nz = zg.size();
  const double sigma = problem.sigma_scalar();
  ControlTable table(problem, yg, controls_per_dim);
  PolicyField policy(tg, yg, zg, problem.control_dim(), field.beta_bound);
  const double central = central_drift_limit(stencil, sigma, yg.step());
  for (std::size_t i = 0; i < tg.size(); ++i) {
    table.refresh(tg[i]);
    const auto v = field.slice(i);
    parallel_for(ny, [&](std::size_t j) {
      for (std::size_t k = 0; k < nz; ++k) {
        const auto h = detail::node_derivatives(v, j, k, ny, nz, yg.step(), zg.step());
        const auto& a = table.candidate(drift_infimum(table.row(j), h.p_y_plus, h.p_y_minus, central).second);
        std::copy(a.begin(), a.end(), policy.alpha_node(i, j, k).begin());
        policy.beta_node(i, j, k) = adversary_sup(h.v_zz, h.v_yz, zg[k], sigma, field.beta_bound).beta;
      }
    });
  }
  return policy;
}

/// Explicit backward solve of the truncated HJBI equation
///   -V_t - inf_a b V_y - 1/2 sigma^2 V_yy
///        - sup_{|beta|<=n} (1/2 z^2 beta^2 V_zz + z sigma beta V_yz) = 0
/// with V(T, y, z) = z f(y) - l*(z) and V = z phi - l*(z) on the z edges.
/// Sub-steps follow the frozen-coefficient bound
///   dt <= C / ((sigma/dy + z |beta*|/dz)^2 + max|b|/dy)
/// recomputed from the current beta* before every sub-step.
inline HjbiSolution solve_hjbi(const ControlProblem& problem, const LossSpec& spec,
                               std::shared_ptr<const ValueField2D> phi, const HjbiOptions& opt = {})
{
  const auto start = std::chrono::steady_clock::now();
  if (!phi) throw std::invalid_argument("solve_hjbi: phi is required");
  if (!(opt.beta_bound > 0.0)) throw std::invalid_argument("solve_hjbi: beta_bound must be positive");
  const auto g = detail::make_grids(problem, opt);
  detail::check_inputs(problem, spec, *phi, g);

  HjbiSolution sol;
  sol.field = ValueField3D(g.t, g.y, g.z, opt.beta_bound);
  sol.field.phi = phi;
  detail::fill_terminal(problem, spec, sol.field, opt.n_t - 1);
  detail::march_hjbi(problem, spec, *phi, sol.field, opt.n_t - 1, opt, sol.stats);
  detail::concavity_diagnostics(sol.field, opt, sol.stats);
  if (opt.extract_policy) sol.policy = extract_policy_3d(sol.field, problem, opt.controls_per_dim, opt.stencil);
  sol.stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

/// Solves phi on the matching (t, y) grid first.
inline HjbiSolution solve_hjbi(const ControlProblem& problem, const LossSpec& spec, const HjbiOptions& opt = {})
{
  HjbOptions hopt;
  hopt.n_t = opt.n_t;
  hopt.n_y = opt.n_y;
  hopt.controls_per_dim = opt.controls_per_dim;
  hopt.stencil = opt.stencil;
  auto phi = std::make_shared<const ValueField2D>(
      solve_hjb(problem, [&](double y) { return problem.f(y); }, hopt, "f"));
  return solve_hjbi(problem, spec, std::move(phi), opt);
}

/// Re-solves on [0, theta] from the field's own slice at theta with the
/// same scheme and returns the restarted field (t grid truncated at theta).
inline ValueField3D dpp_restart(const ValueField3D& field, const ControlProblem& problem, const LossSpec& spec,
                                double theta, HjbiOptions opt = {})
{
  const auto i_theta = field.t_grid.index_of(theta, 1e-9);
  if (!i_theta) throw std::invalid_argument("dpp_restart: theta must be a node of the time grid");
  if (!field.phi) throw std::invalid_argument("dpp_restart: field carries no phi");
  opt.n_t = field.t_grid.size();
  opt.n_y = field.y_grid.size();
  opt.n_z = field.z_grid.size();
  opt.beta_bound = field.beta_bound;

  ValueField3D work(field.t_grid, field.y_grid, field.z_grid, field.beta_bound);
  work.phi = field.phi;
  std::copy(field.slice(*i_theta).begin(), field.slice(*i_theta).end(), work.slice(*i_theta).begin());
  HjbiStats stats;
  detail::march_hjbi(problem, spec, *field.phi, work, *i_theta, opt, stats);

  const std::size_t n = *i_theta + 1;
  ValueField3D out(n == 1 ? UniformGrid(0.0, 0.0, 1) : UniformGrid(0.0, field.t_grid[*i_theta], n), field.y_grid,
                   field.z_grid, field.beta_bound);
  out.phi = field.phi;
  std::copy(work.values.begin(), work.values.begin() + static_cast<std::ptrdiff_t>(n * work.slice_size()),
            out.values.begin());
  return out;
}

} // namespace oce

#endif // OCE_HJBI_HPP
