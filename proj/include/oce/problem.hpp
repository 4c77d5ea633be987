#ifndef OCE_PROBLEM_HPP
#define OCE_PROBLEM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oce/grid.hpp"
#include "oce/loss.hpp"

namespace oce {

/// Axis-aligned box in R^m. A dimension with lo == hi is a fixed coordinate.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  Box() = default;
  Box(std::vector<double> lo_, std::vector<double> hi_) : lo(std::move(lo_)), hi(std::move(hi_))
  {
    if (lo.size() != hi.size()) throw std::invalid_argument("Box: bound dimensions differ");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(lo[i] <= hi[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i]))
        throw std::invalid_argument("Box: each dimension needs finite lo <= hi");
  }
  static Box interval(double lo, double hi) { return Box({lo}, {hi}); }

  std::size_t dim() const { return lo.size(); }

  bool contains(std::span<const double> a, double tol = 0.0) const
  {
    for (std::size_t i = 0; i < dim(); ++i)
      if (a[i] < lo[i] - tol || a[i] > hi[i] + tol) return false;
    return true;
  }

  /// Clamps in place; returns true when any coordinate moved.
  bool clamp(std::span<double> a) const
  {
    bool moved = false;
    for (std::size_t i = 0; i < dim(); ++i) {
      const double c = std::clamp(a[i], lo[i], hi[i]);
      moved = moved || c != a[i];
      a[i] = c;
    }
    return moved;
  }

  Interval axis(std::size_t i) const { return {lo[i], hi[i]}; }
};

/// b(t, y, a) written into out (length d).
using DriftFn = std::function<void(double, std::span<const double>, std::span<const double>, std::span<double>)>;
/// f(y).
using TerminalFn = std::function<double(std::span<const double>)>;

/// Controlled diffusion dY = b(t, Y, a) dt + sigma dW on [0, T] with a
/// bounded terminal cost f and the truncated computational box.
struct ControlProblem {
  std::size_t state_dim = 1;
  DriftFn drift;
  bool drift_affine_in_control = false;
  std::vector<double> sigma{1.0}; // row-major d x d
  Box control_box = Box::interval(0.0, 0.0);
  TerminalFn terminal;
  double horizon = 1.0;
  Box y_box = Box::interval(-6.0, 6.0);
  Interval z_box{0.05, 8.0};
  std::string description;

  std::size_t control_dim() const { return control_box.dim(); }

  double sigma_scalar() const
  {
    if (state_dim != 1) throw std::logic_error("ControlProblem: scalar sigma requested for d != 1");
    return sigma[0];
  }

  double f(double y) const { return terminal(std::span<const double>(&y, 1)); }

  double drift_scalar(double t, double y, std::span<const double> a) const
  {
    double out = 0.0;
    drift(t, std::span<const double>(&y, 1), a, std::span<double>(&out, 1));
    return out;
  }
};

/// Control discretisation of the box in lexicographic order (first
/// coordinate slowest). Vertices only when the drift is affine in the
/// control, since a linear function of a attains its infimum over a box at a
/// vertex; otherwise per_dim equispaced points per free coordinate.
inline std::vector<std::vector<double>> control_candidates(const ControlProblem& p, std::size_t per_dim = 33)
{
  const Box& box = p.control_box;
  std::vector<std::vector<double>> axes(box.dim());
  for (std::size_t i = 0; i < box.dim(); ++i) {
    if (box.lo[i] == box.hi[i]) {
      axes[i] = {box.lo[i]};
    } else if (p.drift_affine_in_control) {
      axes[i] = {box.lo[i], box.hi[i]};
    } else {
      axes[i] = UniformGrid(box.lo[i], box.hi[i], per_dim).nodes();
    }
  }
  std::vector<std::vector<double>> out{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<double>> next;
    next.reserve(out.size() * axis.size());
    for (const auto& prefix : out)
      for (double v : axis) {
        auto c = prefix;
        c.push_back(v);
        next.push_back(std::move(c));
      }
    out = std::move(next);
  }
  return out;
}

struct ProblemCheck {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  double growth_constant = 0.0;    // max |b| / (1 + |a|) over samples
  double lipschitz_constant = 0.0; // max |b1 - b2| / (|t1 - t2| + |y1 - y2|) over samples
  bool ok() const { return errors.empty(); }
};

/// Structural validation plus sampled spot checks of the drift growth and
/// Lipschitz bounds and of the boundedness of f on the y box.
inline ProblemCheck check_problem(const ControlProblem& p, const LossSpec& loss, std::size_t samples = 2000,
                                  unsigned seed = 7)
{
  ProblemCheck rep;
  const std::size_t d = p.state_dim;
  if (!p.drift) rep.errors.push_back("drift: missing");
  if (!p.terminal) rep.errors.push_back("terminal: missing");
  if (p.sigma.size() != d * d) rep.errors.push_back("sigma: expected a d x d matrix");
  if (p.y_box.dim() != d) rep.errors.push_back("y_box: dimension differs from the state dimension");
  if (p.control_box.dim() == 0) rep.errors.push_back("control_box: empty");
  if (!(p.horizon > 0.0)) rep.errors.push_back("horizon: must be positive");
  for (std::size_t i = 0; i < p.y_box.dim(); ++i)
    if (!(p.y_box.hi[i] > p.y_box.lo[i])) rep.errors.push_back("y_box: empty along an axis");

  const Interval dom = loss.conj_domain;
  if (!(p.z_box.hi > p.z_box.lo)) rep.errors.push_back("z_box: require lo < hi");
  if (p.z_box.lo < dom.lo || p.z_box.hi > dom.hi)
    rep.errors.push_back("z_box: [" + std::to_string(p.z_box.lo) + ", " + std::to_string(p.z_box.hi)
                         + "] is not contained in dom(l*) = [" + std::to_string(dom.lo) + ", "
                         + std::to_string(dom.hi) + "] of loss '" + loss.name + "'");
  if (!(p.z_box.lo > 0.0) && dom.lo != 0.0)
    rep.errors.push_back("z_box: lower edge must be positive unless dom(l*) starts at 0");
  if (!rep.errors.empty()) return rep;

  std::mt19937_64 rng(seed);
  auto draw = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  std::vector<double> y1(d), y2(d), a(p.control_dim()), b1(d), b2(d);
  double fmax = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double t1 = draw(0.0, p.horizon), t2 = draw(0.0, p.horizon);
    for (std::size_t i = 0; i < d; ++i) {
      y1[i] = draw(p.y_box.lo[i], p.y_box.hi[i]);
      y2[i] = draw(p.y_box.lo[i], p.y_box.hi[i]);
    }
    double anorm = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = p.control_box.lo[i] == p.control_box.hi[i] ? p.control_box.lo[i]
                                                          : draw(p.control_box.lo[i], p.control_box.hi[i]);
      anorm += a[i] * a[i];
    }
    p.drift(t1, y1, a, b1);
    p.drift(t2, y2, a, b2);
    double bn = 0.0, db = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      bn += b1[i] * b1[i];
      db += (b1[i] - b2[i]) * (b1[i] - b2[i]);
      dy += (y1[i] - y2[i]) * (y1[i] - y2[i]);
    }
    rep.growth_constant = std::max(rep.growth_constant, std::sqrt(bn) / (1.0 + std::sqrt(anorm)));
    const double denom = std::abs(t1 - t2) + std::sqrt(dy);
    if (denom > 1e-12) rep.lipschitz_constant = std::max(rep.lipschitz_constant, std::sqrt(db) / denom);
    const double fv = p.terminal(y1);
    if (!std::isfinite(fv)) {
      rep.errors.push_back("terminal: non-finite value inside y_box");
      break;
    }
    fmax = std::max(fmax, std::abs(fv));
  }
  if (fmax > 1e6) rep.warnings.push_back("terminal: |f| exceeds 1e6 on y_box");
  return rep;
}

// Presets used by the CLI and the shipped fixtures (d = 1, m = 1).
namespace presets {

/// b(t, y, a) = mu + a.
inline DriftFn shifted_control(double mu = 0.0)
{
  return [mu](double, std::span<const double>, std::span<const double> a, std::span<double> out) {
    out[0] = mu + a[0];
  };
}

/// b(t, y, a) = mu, independent of the control.
inline DriftFn constant_drift(double mu)
{
  return [mu](double, std::span<const double>, std::span<const double>, std::span<double> out) { out[0] = mu; };
}

/// b(t, y, a) = mu - kappa y + gain a.
inline DriftFn affine(double mu, double kappa, double gain)
{
  return [=](double, std::span<const double> y, std::span<const double> a, std::span<double> out) {
    out[0] = mu - kappa * y[0] + gain * a[0];
  };
}

inline TerminalFn constant(double c)
{
  return [c](std::span<const double>) { return c; };
}

inline TerminalFn linear(double slope = 1.0, double intercept = 0.0)
{
  return [=](std::span<const double> y) { return intercept + slope * y[0]; };
}

inline TerminalFn clamped_linear(double lo, double hi, double slope = 1.0)
{
  return [=](std::span<const double> y) { return std::clamp(slope * y[0], lo, hi); };
}

inline TerminalFn tanh_terminal(double scale = 1.0)
{
  return [scale](std::span<const double> y) { return std::tanh(scale * y[0]); };
}

inline TerminalFn quadratic(double a = 1.0)
{
  return [a](std::span<const double> y) { return a * y[0] * y[0]; };
}

} // namespace presets

} // namespace oce

#endif // OCE_PROBLEM_HPP
