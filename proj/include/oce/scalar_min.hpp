#ifndef OCE_SCALAR_MIN_HPP
#define OCE_SCALAR_MIN_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace oce {

struct ScalarMin {
  double x = 0.0;
  double value = 0.0;
  std::size_t iterations = 0;
};

/// Golden-section search for a unimodal function on [a, b]. Stops once the
/// bracket is shorter than tol.
template <class F>
ScalarMin golden_section_minimize(F&& f, double a, double b, double tol,
                                  std::size_t max_iter = 500)
{
  if (!(tol > 0.0)) throw std::invalid_argument("golden_section_minimize: tol must be positive");
  if (b < a) std::swap(a, b);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;

  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  std::size_t it = 0;
  while (b - a > tol && it < max_iter) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++it;
  }
  // Return the best of the interior probes and the midpoint.
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  ScalarMin out{m, fm, it};
  if (fc < out.value) out = {c, fc, it};
  if (fd < out.value) out = {d, fd, it};
  return out;
}

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t expansions = 0;
};

/// Grows [lo, hi] geometrically until a convex f has its minimiser inside:
/// f(lo) >= f(mid) <= f(hi). Throws after max_expansions doublings.
template <class F>
Bracket bracket_convex_minimum(F&& f, double lo, double hi, std::size_t max_expansions = 60)
{
  Bracket br{lo, hi, 0};
  while (true) {
    const double mid = 0.5 * (br.lo + br.hi);
    const double fm = f(mid);
    const bool left_ok = f(br.lo) >= fm;
    const bool right_ok = f(br.hi) >= fm;
    if (left_ok && right_ok) return br;
    if (br.expansions == max_expansions)
      throw std::runtime_error("bracket_convex_minimum: minimum not bracketed after "
                               + std::to_string(max_expansions) + " expansions");
    const double w = br.hi - br.lo;
    if (!left_ok) br.lo -= w;
    if (!right_ok) br.hi += w;
    ++br.expansions;
  }
}

} // namespace oce

#endif // OCE_SCALAR_MIN_HPP
