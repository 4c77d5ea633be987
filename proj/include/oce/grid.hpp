#ifndef OCE_GRID_HPP
#define OCE_GRID_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oce {

/// Closed interval [lo, hi]; hi may be +inf.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
  double width() const { return hi - lo; }
};

/// Uniform grid lo = x_0 < ... < x_{n-1} = hi. A single-node grid has lo == hi.
class UniformGrid {
public:
  UniformGrid() = default;

  UniformGrid(double lo, double hi, std::size_t n) : lo_(lo), hi_(hi), n_(n)
  {
    if (n == 0) throw std::invalid_argument("UniformGrid: need at least one node");
    if (!std::isfinite(lo) || !std::isfinite(hi))
      throw std::invalid_argument("UniformGrid: bounds must be finite");
    if (n == 1 && lo != hi)
      throw std::invalid_argument("UniformGrid: single node requires lo == hi");
    if (n > 1 && !(hi > lo))
      throw std::invalid_argument("UniformGrid: require hi > lo");
  }

  std::size_t size() const { return n_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double step() const { return n_ > 1 ? (hi_ - lo_) / static_cast<double>(n_ - 1) : 0.0; }

  double operator[](std::size_t i) const
  {
    if (i + 1 == n_) return hi_;
    return lo_ + static_cast<double>(i) * step();
  }

  std::vector<double> nodes() const
  {
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = (*this)[i];
    return out;
  }

  /// Cell index i and weight w with x ~ (1-w) x_i + w x_{i+1}; x is clamped to the grid.
  std::pair<std::size_t, double> locate(double x) const
  {
    if (n_ == 1 || x <= lo_) return {0, 0.0};
    if (x >= hi_) return {n_ - 2, 1.0};
    const double s = (x - lo_) / step();
    auto i = static_cast<std::size_t>(s);
    if (i > n_ - 2) i = n_ - 2;
    return {i, std::clamp(s - static_cast<double>(i), 0.0, 1.0)};
  }

  /// Index of the node equal to x within tol, if any.
  std::optional<std::size_t> index_of(double x, double tol = 1e-12) const
  {
    const double scale = std::max({1.0, std::abs(lo_), std::abs(hi_)});
    if (n_ == 1) {
      if (std::abs(x - lo_) <= tol * scale) return 0;
      return std::nullopt;
    }
    const double s = std::round((x - lo_) / step());
    if (s < 0 || s > static_cast<double>(n_ - 1)) return std::nullopt;
    const auto i = static_cast<std::size_t>(s);
    if (std::abs((*this)[i] - x) <= tol * scale) return i;
    return std::nullopt;
  }

  bool operator==(const UniformGrid&) const = default;

private:
  double lo_ = 0.0;
  double hi_ = 0.0;
  std::size_t n_ = 1;
};

} // namespace oce

#endif // OCE_GRID_HPP
