#ifndef OCE_FIELDS_HPP
#define OCE_FIELDS_HPP

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "oce/grid.hpp"

namespace oce {

/// Value function sampled on a (t, y) grid; bilinear between nodes.
struct ValueField2D {
  UniformGrid t_grid;
  UniformGrid y_grid;
  std::vector<double> values; // (t, y)
  std::string terminal_desc;
  std::size_t substeps = 0;

  ValueField2D() = default;
  ValueField2D(UniformGrid t, UniformGrid y, std::string desc = {})
      : t_grid(t), y_grid(y), values(t.size() * y.size(), 0.0), terminal_desc(std::move(desc))
  {
  }

  double& at(std::size_t i, std::size_t j) { return values[i * y_grid.size() + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * y_grid.size() + j]; }

  std::span<double> slice(std::size_t i) { return {values.data() + i * y_grid.size(), y_grid.size()}; }
  std::span<const double> slice(std::size_t i) const { return {values.data() + i * y_grid.size(), y_grid.size()}; }

  double interpolate(double t, double y) const
  {
    const auto [i, wt] = t_grid.locate(t);
    const auto [j, wy] = y_grid.locate(y);
    const std::size_t i1 = t_grid.size() > 1 ? i + 1 : i;
    const std::size_t j1 = y_grid.size() > 1 ? j + 1 : j;
    const double a = (1.0 - wy) * at(i, j) + wy * at(i, j1);
    const double b = (1.0 - wy) * at(i1, j) + wy * at(i1, j1);
    return (1.0 - wt) * a + wt * b;
  }
};

/// Value function on the enlarged (t, y, z) grid. phi is the risk-free
/// value that supplied the z-edge data.
struct ValueField3D {
  UniformGrid t_grid;
  UniformGrid y_grid;
  UniformGrid z_grid;
  std::vector<double> values; // (t, y, z)
  double beta_bound = 0.0;
  std::shared_ptr<const ValueField2D> phi;

  ValueField3D() = default;
  ValueField3D(UniformGrid t, UniformGrid y, UniformGrid z, double n)
      : t_grid(t), y_grid(y), z_grid(z), values(t.size() * y.size() * z.size(), 0.0), beta_bound(n)
  {
  }

  std::size_t slice_size() const { return y_grid.size() * z_grid.size(); }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const
  {
    return (i * y_grid.size() + j) * z_grid.size() + k;
  }
  double& at(std::size_t i, std::size_t j, std::size_t k) { return values[index(i, j, k)]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const { return values[index(i, j, k)]; }

  std::span<double> slice(std::size_t i) { return {values.data() + i * slice_size(), slice_size()}; }
  std::span<const double> slice(std::size_t i) const { return {values.data() + i * slice_size(), slice_size()}; }

  /// Trilinear interpolation, clamped to the grid box.
  double interpolate(double t, double y, double z) const
  {
    const auto [i, wt] = t_grid.locate(t);
    const auto [j, wy] = y_grid.locate(y);
    const auto [k, wz] = z_grid.locate(z);
    double acc = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) {
          const double w = (a ? wt : 1.0 - wt) * (b ? wy : 1.0 - wy) * (c ? wz : 1.0 - wz);
          if (w != 0.0) acc += w * at(i + a, j + b, k + c);
        }
    return acc;
  }
};

} // namespace oce

#endif // OCE_FIELDS_HPP
