#ifndef OCE_HJB_FREE_HPP
#define OCE_HJB_FREE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "oce/fields.hpp"
#include "oce/grid.hpp"
#include "oce/parallel.hpp"
#include "oce/policy.hpp"
#include "oce/problem.hpp"

namespace oce {

/// NaN/Inf produced by a PDE solve; carries the offending node.
class NumericalError : public std::runtime_error {
public:
  NumericalError(const std::string& what, double t, double y, double z = std::numeric_limits<double>::quiet_NaN())
      : std::runtime_error(what + " at t=" + std::to_string(t) + ", y=" + std::to_string(y)
                           + (std::isnan(z) ? std::string() : ", z=" + std::to_string(z))),
        t_(t), y_(y), z_(z)
  {
  }
  double t() const { return t_; }
  double y() const { return y_; }
  double z() const { return z_; }

private:
  double t_, y_, z_;
};

/// Drift values b(t, y_j, a_c) for every y node and control candidate at one time.
class ControlTable {
public:
  ControlTable(const ControlProblem& problem, const UniformGrid& y, std::size_t per_dim = 33)
      : problem_(&problem), y_(y), candidates_(control_candidates(problem, per_dim)),
        drift_(y.size() * candidates_.size(), 0.0)
  {
    if (problem.state_dim != 1) throw std::invalid_argument("PDE solvers support a scalar state only");
  }

  void refresh(double t)
  {
    if (have_time_ && t == time_) return;
    max_abs_ = 0.0;
    for (std::size_t j = 0; j < y_.size(); ++j)
      for (std::size_t c = 0; c < candidates_.size(); ++c) {
        const double b = problem_->drift_scalar(t, y_[j], candidates_[c]);
        drift_[j * candidates_.size() + c] = b;
        max_abs_ = std::max(max_abs_, std::abs(b));
      }
    time_ = t;
    have_time_ = true;
  }

  std::span<const double> row(std::size_t j) const
  {
    return {drift_.data() + j * candidates_.size(), candidates_.size()};
  }
  const std::vector<double>& candidate(std::size_t c) const { return candidates_[c]; }
  std::size_t size() const { return candidates_.size(); }
  double max_abs_drift() const { return max_abs_; }

private:
  const ControlProblem* problem_;
  UniformGrid y_;
  std::vector<std::vector<double>> candidates_;
  std::vector<double> drift_;
  double max_abs_ = 0.0;
  double time_ = 0.0;
  bool have_time_ = false;
};

/// inf over candidates of b * dV/dy. Where |b| <= central_limit the centred
/// difference is used (monotone as long as |b| dy <= sigma^2); elsewhere the
/// difference is upwinded: forward where b > 0, backward where b < 0. Pass
/// central_limit = 0 for pure upwinding. Ties keep the earliest
/// (lexicographically smallest) candidate.
inline std::pair<double, std::size_t> drift_infimum(std::span<const double> drifts, double d_plus, double d_minus,
                                                    double central_limit = 0.0)
{
  const double d_central = 0.5 * (d_plus + d_minus);
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t c = 0; c < drifts.size(); ++c) {
    const double b = drifts[c];
    double v;
    if (std::abs(b) <= central_limit)
      v = b * d_central;
    else
      v = b > 0.0 ? b * d_plus : (b < 0.0 ? b * d_minus : 0.0);
    if (v < best) {
      best = v;
      arg = c;
    }
  }
  return {best, arg};
}

enum class DriftStencil { hybrid, upwind };

/// Largest |b| for which the centred drift difference keeps the scheme monotone.
inline double central_drift_limit(DriftStencil stencil, double sigma, double dy)
{
  return stencil == DriftStencil::hybrid ? sigma * sigma / dy : 0.0;
}

/// One-sided differences at the y edges: the missing side reuses the
/// available one.
inline std::pair<double, double> y_differences(std::span<const double> v, std::size_t j, std::size_t stride,
                                               std::size_t n_y, double dy)
{
  const double vj = v[j * stride];
  double dp = j + 1 < n_y ? (v[(j + 1) * stride] - vj) / dy : 0.0;
  double dm = j > 0 ? (vj - v[(j - 1) * stride]) / dy : 0.0;
  if (j == 0) dm = dp;
  if (j + 1 == n_y) dp = dm;
  return {dp, dm};
}

/// Second y-difference; at an edge the neighbour's centred stencil is used
/// (the one-sided three-point formula).
inline double y_second_difference(std::span<const double> v, std::size_t j, std::size_t stride, std::size_t n_y,
                                  double dy)
{
  const std::size_t c = std::clamp<std::size_t>(j, 1, n_y - 2);
  return (v[(c + 1) * stride] - 2.0 * v[c * stride] + v[(c - 1) * stride]) / (dy * dy);
}

struct HjbOptions {
  std::size_t n_t = 201;
  std::size_t n_y = 201;
  double cfl_safety = 0.9;
  std::size_t controls_per_dim = 33;
  DriftStencil stencil = DriftStencil::hybrid;
};

/// Risk-free value phi(t, y) = inf_alpha E[g(Y_T)] for a given terminal g,
/// by explicit backward stepping of
///   -phi_t - inf_a b phi_y - 1/2 sigma^2 phi_yy = 0,  phi(T) = g.
/// Each grid interval is split into equal sub-steps satisfying
///   dt (sigma^2/dy^2 + max|b|/dy) <= cfl_safety,
/// under which the scheme is monotone away from the y edges.
inline ValueField2D solve_hjb(const ControlProblem& problem, const std::function<double(double)>& terminal,
                              const HjbOptions& opt = {}, std::string terminal_desc = "terminal")
{
  if (opt.n_t < 2 || opt.n_y < 3) throw std::invalid_argument("solve_hjb: need n_t >= 2 and n_y >= 3");
  const UniformGrid tg(0.0, problem.horizon, opt.n_t);
  const UniformGrid yg(problem.y_box.lo[0], problem.y_box.hi[0], opt.n_y);
  ValueField2D field(tg, yg, std::move(terminal_desc));

  const double sigma = problem.sigma_scalar();
  const double half_s2 = 0.5 * sigma * sigma;
  const double dy = yg.step();
  const std::size_t ny = yg.size();
  ControlTable table(problem, yg, opt.controls_per_dim);
  const double central = central_drift_limit(opt.stencil, sigma, dy);

  std::vector<double> v(ny), next(ny);
  for (std::size_t j = 0; j < ny; ++j) v[j] = terminal(yg[j]);
  std::copy(v.begin(), v.end(), field.slice(opt.n_t - 1).begin());
  for (std::size_t j = 0; j < ny; ++j)
    if (!std::isfinite(v[j])) throw NumericalError("solve_hjb: non-finite terminal value", problem.horizon, yg[j]);

  std::size_t substeps = 0;
  for (std::size_t i = opt.n_t - 1; i-- > 0;) {
    const double t_hi = tg[i + 1];
    const double span_t = t_hi - tg[i];
    table.refresh(t_hi);
    const double rate = sigma * sigma / (dy * dy) + table.max_abs_drift() / dy;
    const auto m = static_cast<std::size_t>(std::max(1.0, std::ceil(span_t * rate / opt.cfl_safety)));
    const double dt = span_t / static_cast<double>(m);
    for (std::size_t s = 0; s < m; ++s) {
      table.refresh(t_hi - static_cast<double>(s) * dt);
      parallel_for(ny, [&](std::size_t j) {
        const auto [dp, dm] = y_differences(v, j, 1, ny, dy);
        const double ham = drift_infimum(table.row(j), dp, dm, central).first + half_s2 * y_second_difference(v, j, 1, ny, dy);
        next[j] = v[j] + dt * ham;
      });
      std::swap(v, next);
    }
    substeps += m;
    for (std::size_t j = 0; j < ny; ++j)
      if (!std::isfinite(v[j])) throw NumericalError("solve_hjb: non-finite value", tg[i], yg[j]);
    std::copy(v.begin(), v.end(), field.slice(i).begin());
  }
  field.substeps = substeps;
  return field;
}

/// Minimising control at every (t, y) node of a solved field, as a policy
/// with a single z node (z = 1) and beta = 0.
inline PolicyField extract_policy_2d(const ValueField2D& field, const ControlProblem& problem,
                                     std::size_t controls_per_dim = 33,
                                     DriftStencil stencil = DriftStencil::hybrid)
{
  const auto& tg = field.t_grid;
  const auto& yg = field.y_grid;
  ControlTable table(problem, yg, controls_per_dim);
  PolicyField policy(tg, yg, UniformGrid(1.0, 1.0, 1), problem.control_dim(), 0.0);
  const double central = central_drift_limit(stencil, problem.sigma_scalar(), yg.step());
  for (std::size_t i = 0; i < tg.size(); ++i) {
    table.refresh(tg[i]);
    const auto v = field.slice(i);
    for (std::size_t j = 0; j < yg.size(); ++j) {
      const auto [dp, dm] = y_differences(v, j, 1, yg.size(), yg.step());
      const auto& a = table.candidate(drift_infimum(table.row(j), dp, dm, central).second);
      std::copy(a.begin(), a.end(), policy.alpha_node(i, j, 0).begin());
    }
  }
  return policy;
}

} // namespace oce

#endif // OCE_HJB_FREE_HPP
