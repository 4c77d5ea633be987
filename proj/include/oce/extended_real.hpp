#ifndef OCE_EXTENDED_REAL_HPP
#define OCE_EXTENDED_REAL_HPP

#include <cmath>
#include <limits>
#include <stdexcept>

namespace oce {

// Extended reals are plain doubles where +inf is a legal value. Arithmetic
// saturates at +inf; forming inf - inf is an error instead of a silent NaN.

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_plus_inf(double x) { return x == kInf; }

inline double ext_add(double a, double b)
{
  if ((a == kInf && b == -kInf) || (a == -kInf && b == kInf))
    throw std::domain_error("extended real: inf - inf is undefined");
  return a + b;
}

inline double ext_sub(double a, double b) { return ext_add(a, -b); }

// 0 * inf is taken as 0, the usual convention for weighted sums of l*.
inline double ext_mul(double w, double x)
{
  if (w == 0.0) return 0.0;
  return w * x;
}

} // namespace oce

#endif // OCE_EXTENDED_REAL_HPP
