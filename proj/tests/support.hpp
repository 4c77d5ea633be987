#ifndef OCE_TESTS_SUPPORT_HPP
#define OCE_TESTS_SUPPORT_HPP

// Reference values computed independently of the library: plain composite
// Simpson quadrature against the standard normal density.

#include <cmath>
#include <functional>
#include <numbers>

#include "oce/problem.hpp"

namespace testing_support {

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

/// E[g(N(0,1))] by Simpson's rule on [-12, 12].
inline double normal_expectation(const std::function<double(double)>& g, int panels = 20000)
{
  const double a = -12.0, b = 12.0, h = (b - a) / panels;
  double acc = g(a) * normal_pdf(a) + g(b) * normal_pdf(b);
  for (int i = 1; i < panels; ++i) {
    const double x = a + i * h;
    acc += (i % 2 ? 4.0 : 2.0) * g(x) * normal_pdf(x);
  }
  return acc * h / 3.0;
}

/// Tanh fixture: b = a, a in [-1, 1], sigma = 1, T = 1. Since tanh is
/// increasing the minimiser of E[g(Y_T)] for increasing g pushes down at
/// full speed, so Y_T = y - T + W_T.
inline double tanh_psi(double y = 0.0, double horizon = 1.0)
{
  const double s = std::sqrt(horizon);
  return std::log(normal_expectation([&](double x) { return std::exp(std::tanh(y - horizon + s * x)); }));
}

inline double tanh_phi(double y = 0.0, double horizon = 1.0)
{
  const double s = std::sqrt(horizon);
  return normal_expectation([&](double x) { return std::tanh(y - horizon + s * x); });
}

/// Expected shortfall of N(0,1) at tail mass g: E[X | X >= q], by Simpson on
/// the tail and bisection for q.
inline double standard_normal_es(double g)
{
  double lo = -12.0, hi = 12.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double tail = 0.5 * std::erfc(mid / std::sqrt(2.0));
    (tail > g ? lo : hi) = mid;
  }
  const double q = 0.5 * (lo + hi);
  const int panels = 20000;
  const double b = 14.0, h = (b - q) / panels;
  double acc = q * normal_pdf(q) + b * normal_pdf(b);
  for (int i = 1; i < panels; ++i) {
    const double x = q + i * h;
    acc += (i % 2 ? 4.0 : 2.0) * x * normal_pdf(x);
  }
  return acc * h / 3.0 / g;
}

inline oce::ControlProblem tanh_problem()
{
  oce::ControlProblem p;
  p.drift = oce::presets::shifted_control(0.0);
  p.drift_affine_in_control = true;
  p.control_box = oce::Box::interval(-1.0, 1.0);
  p.terminal = oce::presets::tanh_terminal(1.0);
  p.z_box = {0.0, 8.0};
  p.description = "tanh fixture";
  return p;
}

inline oce::ControlProblem avar_problem()
{
  oce::ControlProblem p;
  p.drift = oce::presets::constant_drift(0.0);
  p.drift_affine_in_control = true;
  p.control_box = oce::Box::interval(0.0, 0.0);
  p.terminal = oce::presets::clamped_linear(-5.0, 5.0, 1.0);
  p.z_box = {0.0, 2.0};
  p.description = "avar uncontrolled fixture";
  return p;
}

} // namespace testing_support

#endif // OCE_TESTS_SUPPORT_HPP
