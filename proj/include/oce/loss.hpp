#ifndef OCE_LOSS_HPP
#define OCE_LOSS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oce/extended_real.hpp"
#include "oce/grid.hpp"
#include "oce/scalar_min.hpp"

namespace oce {

/// A loss function l (increasing, convex, bounded below, l(0) = 0,
/// l*(1) = 0) together with its convex conjugate l*(z) = sup_x (x z - l(x)).
struct LossSpec {
  std::string name;
  std::vector<double> params;

  std::function<double(double)> loss;      // l
  std::function<double(double)> conj;      // l*, evaluated on conj_domain
  Interval conj_domain{0.0, kInf};          // dom(l*), hi may be +inf
  bool smooth = true;                       // l is C^1

  /// Right derivative of l. When present it is the maximiser of
  /// z u - l*(z) over dom(l*), which lets the dual solver skip a line search.
  std::function<double(double)> derivative;

  double l(double x) const { return loss(x); }

  /// l*(z), +inf outside the effective domain.
  double l_conj(double z) const
  {
    if (!(z >= conj_domain.lo) || !(z <= conj_domain.hi)) return kInf;
    return conj(z);
  }

  bool in_domain(double z) const { return conj_domain.contains(z); }
};

namespace detail {

inline LossSpec make_entropic()
{
  LossSpec s;
  s.name = "entropic";
  s.loss = [](double x) { return std::expm1(x); };
  s.conj = [](double z) { return z > 0.0 ? z * std::log(z) - z + 1.0 : 1.0; };
  s.conj_domain = {0.0, kInf};
  s.smooth = true;
  s.derivative = [](double x) { return std::exp(x); };
  return s;
}

inline LossSpec make_mmv()
{
  LossSpec s;
  s.name = "mmv";
  s.loss = [](double x) {
    const double p = std::max(x + 1.0, 0.0);
    return 0.5 * (p * p - 1.0);
  };
  // sup_x (x z - l(x)) is attained at x = z - 1 >= -1 for z >= 0.
  s.conj = [](double z) { return 0.5 * (z - 1.0) * (z - 1.0); };
  s.conj_domain = {0.0, kInf};
  s.smooth = true;
  s.derivative = [](double x) { return std::max(x + 1.0, 0.0); };
  return s;
}

inline LossSpec make_avar(double gamma)
{
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("loss preset avar: gamma must lie in (0,1), got "
                                + std::to_string(gamma));
  LossSpec s;
  s.name = "avar";
  s.params = {gamma};
  s.loss = [gamma](double x) { return std::max(x, 0.0) / gamma; };
  s.conj = [](double) { return 0.0; };
  s.conj_domain = {0.0, 1.0 / gamma};
  s.smooth = false;
  s.derivative = [gamma](double x) { return x >= 0.0 ? 1.0 / gamma : 0.0; };
  return s;
}

} // namespace detail

/// Named presets: "entropic", "mmv" (monotone mean-variance), "avar" (params = {gamma}).
inline LossSpec preset(const std::string& name, std::span<const double> params = {})
{
  if (name == "entropic") return detail::make_entropic();
  if (name == "mmv") return detail::make_mmv();
  if (name == "avar") {
    if (params.size() != 1)
      throw std::invalid_argument("loss preset avar: expected one parameter (gamma)");
    return detail::make_avar(params[0]);
  }
  throw std::invalid_argument("unknown loss preset '" + name + "'");
}

inline LossSpec preset(const std::string& name, std::initializer_list<double> params)
{
  return preset(name, std::span<const double>(params.begin(), params.size()));
}

/// Brute-force Fenchel transform: max over an n_pts grid on x_box of
/// x z - l(x), polished by golden section in the winning cell. Returns +inf
/// when the maximiser sits on the box edge with the objective still rising.
inline double conjugate_numeric(const LossSpec& spec, double z, Interval x_box,
                                std::size_t n_pts = 100001)
{
  if (n_pts < 2) throw std::invalid_argument("conjugate_numeric: n_pts must be >= 2");
  if (!x_box.finite() || !(x_box.hi > x_box.lo))
    throw std::invalid_argument("conjugate_numeric: x_box must be a finite, nonempty interval");

  const UniformGrid xs(x_box.lo, x_box.hi, n_pts);
  auto objective = [&](double x) { return x * z - spec.l(x); };

  std::size_t best = 0;
  double best_val = objective(xs[0]);
  for (std::size_t i = 1; i < n_pts; ++i) {
    const double v = objective(xs[i]);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  if (best == n_pts - 1 && best_val > objective(xs[n_pts - 2])) return kInf;
  if (best == 0 && best_val > objective(xs[1])) return kInf;

  const double a = xs[best == 0 ? 0 : best - 1];
  const double b = xs[best == n_pts - 1 ? best : best + 1];
  const auto polished = golden_section_minimize([&](double x) { return -objective(x); }, a, b,
                                                1e-12 * std::max(1.0, std::abs(b - a)));
  return std::max(best_val, -polished.value);
}

struct ClauseResult {
  std::string clause;
  bool passed = false;
  double worst = 0.0;   // magnitude of the worst violation, or the tested quantity
  std::string detail;
};

struct AssumptionReport {
  std::string loss_name;
  std::vector<ClauseResult> clauses;
  double conjugate_max_deviation = 0.0;
  std::size_t fenchel_young_violations = 0;

  bool all_passed() const
  {
    return std::all_of(clauses.begin(), clauses.end(),
                       [](const ClauseResult& c) { return c.passed; });
  }

  const ClauseResult* find(const std::string& clause) const
  {
    for (const auto& c : clauses)
      if (c.clause == clause) return &c;
    return nullptr;
  }
};

/// Checks the loss-function assumptions on finite grids. Failures are report
/// entries. The "l(x) > x for |x| large" clause is reported per tail.
inline AssumptionReport check_assumptions(const LossSpec& spec, std::span<const double> x_grid,
                                          std::span<const double> z_grid, double tol,
                                          std::size_t conj_pts = 100001)
{
  if (x_grid.size() < 3 || z_grid.empty())
    throw std::invalid_argument("check_assumptions: need >= 3 x nodes and a nonempty z grid");

  std::vector<double> xs(x_grid.begin(), x_grid.end());
  std::sort(xs.begin(), xs.end());
  std::vector<double> ls(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ls[i] = spec.l(xs[i]);

  AssumptionReport rep;
  rep.loss_name = spec.name;

  const double l0 = spec.l(0.0);
  rep.clauses.push_back({"l(0)=0", std::abs(l0) <= tol, std::abs(l0), ""});

  const double lc1 = spec.l_conj(1.0);
  rep.clauses.push_back({"l*(1)=0", std::isfinite(lc1) && std::abs(lc1) <= tol,
                         std::isfinite(lc1) ? std::abs(lc1) : kInf, ""});

  double worst_dec = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) worst_dec = std::max(worst_dec, ls[i - 1] - ls[i]);
  rep.clauses.push_back({"nondecreasing", worst_dec <= tol, worst_dec, ""});

  // Divided second differences, so non-uniform grids work too.
  double worst_conv = 0.0;
  for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
    const double s1 = (ls[i] - ls[i - 1]) / (xs[i] - xs[i - 1]);
    const double s2 = (ls[i + 1] - ls[i]) / (xs[i + 1] - xs[i]);
    worst_conv = std::max(worst_conv, s1 - s2);
  }
  rep.clauses.push_back({"convex", worst_conv <= tol, worst_conv, ""});

  // A convex nondecreasing l is bounded below iff its slope vanishes at -inf;
  // the left-end slope of the grid stands in for that limit.
  const double left_slope = (ls[1] - ls[0]) / (xs[1] - xs[0]);
  rep.clauses.push_back({"bounded below", std::isfinite(ls[0]) && left_slope <= 1e-3, left_slope,
                         "left-end slope used as a proxy for the slope at -inf"});

  const double left_gap = ls.front() - xs.front();
  const double right_gap = ls.back() - xs.back();
  rep.clauses.push_back({"l(x)>x left tail", left_gap > tol, left_gap, "x = " + std::to_string(xs.front())});
  rep.clauses.push_back({"l(x)>x right tail", right_gap > tol, right_gap, "x = " + std::to_string(xs.back())});

  double worst_fy = 0.0;
  for (double z : z_grid) {
    const double lc = spec.l_conj(z);
    if (!std::isfinite(lc)) continue;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double excess = xs[i] * z - lc - ls[i];
      if (excess > tol * (1.0 + std::abs(xs[i]) + std::abs(z))) ++rep.fenchel_young_violations;
      worst_fy = std::max(worst_fy, excess);
    }
  }
  rep.clauses.push_back({"fenchel-young", rep.fenchel_young_violations == 0, worst_fy, ""});

  const Interval box{xs.front(), xs.back()};
  double dev = 0.0;
  for (double z : z_grid) {
    const double analytic = spec.l_conj(z);
    const double numeric = conjugate_numeric(spec, z, box, conj_pts);
    if (std::isinf(analytic) || std::isinf(numeric)) {
      if (analytic != numeric) dev = kInf;
      continue;
    }
    dev = std::max(dev, std::abs(analytic - numeric));
  }
  rep.conjugate_max_deviation = dev;
  rep.clauses.push_back({"conjugate matches numeric", dev <= 1e-6, dev, ""});
  return rep;
}

} // namespace oce

#endif // OCE_LOSS_HPP
