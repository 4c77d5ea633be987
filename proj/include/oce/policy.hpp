#ifndef OCE_POLICY_HPP
#define OCE_POLICY_HPP

#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "oce/grid.hpp"
#include "oce/problem.hpp"

namespace oce {

/// Anything that maps (t, y, z) to a control in A and an adversary volatility beta.
template <class P>
concept FeedbackPolicy = requires(const P& p, double t, std::span<const double> y, double z, std::span<double> out) {
  { p.control(t, y, z, out) };
  { p.adversary(t, y, z, out) };
};

/// Grid-sampled feedback controls alpha*(t, y, z) and adversary beta*(t, y, z)
/// for a scalar state. Off-grid queries use trilinear interpolation with the
/// query clamped to the grid box, so values stay in the convex control set
/// and inside the beta ball.
class PolicyField {
public:
  PolicyField() = default;

  PolicyField(UniformGrid t, UniformGrid y, UniformGrid z, std::size_t control_dim, double beta_bound)
      : t_(t), y_(y), z_(z), m_(control_dim), beta_bound_(beta_bound),
        alpha_(t.size() * y.size() * z.size() * control_dim, 0.0), beta_(t.size() * y.size() * z.size(), 0.0)
  {
    if (control_dim == 0) throw std::invalid_argument("PolicyField: control dimension must be positive");
  }

  /// A policy that ignores the state.
  static PolicyField constant(std::vector<double> alpha, double beta, double horizon)
  {
    PolicyField p(UniformGrid(0.0, horizon, 2), UniformGrid(0.0, 0.0, 1), UniformGrid(1.0, 1.0, 1),
                  alpha.size(), std::abs(beta));
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t c = 0; c < alpha.size(); ++c) p.alpha_node(i, 0, 0)[c] = alpha[c];
      p.beta_node(i, 0, 0) = beta;
    }
    return p;
  }

  const UniformGrid& t_grid() const { return t_; }
  const UniformGrid& y_grid() const { return y_; }
  const UniformGrid& z_grid() const { return z_; }
  std::size_t control_dim() const { return m_; }
  double beta_bound() const { return beta_bound_; }
  const std::vector<double>& alpha_data() const { return alpha_; }
  const std::vector<double>& beta_data() const { return beta_; }

  std::size_t node(std::size_t i, std::size_t j, std::size_t k) const
  {
    return (i * y_.size() + j) * z_.size() + k;
  }

  std::span<double> alpha_node(std::size_t i, std::size_t j, std::size_t k)
  {
    return {alpha_.data() + node(i, j, k) * m_, m_};
  }
  std::span<const double> alpha_node(std::size_t i, std::size_t j, std::size_t k) const
  {
    return {alpha_.data() + node(i, j, k) * m_, m_};
  }
  double& beta_node(std::size_t i, std::size_t j, std::size_t k) { return beta_[node(i, j, k)]; }
  double beta_node(std::size_t i, std::size_t j, std::size_t k) const { return beta_[node(i, j, k)]; }

  void control(double t, std::span<const double> y, double z, std::span<double> out) const
  {
    for (std::size_t c = 0; c < m_; ++c) out[c] = 0.0;
    blend(t, y[0], z, [&](std::size_t n, double w) {
      for (std::size_t c = 0; c < m_; ++c) out[c] += w * alpha_[n * m_ + c];
    });
  }

  void adversary(double t, std::span<const double> y, double z, std::span<double> out) const
  {
    double b = 0.0;
    blend(t, y[0], z, [&](std::size_t n, double w) { b += w * beta_[n]; });
    out[0] = b;
  }

  /// Every alpha inside the control box and every |beta| within the bound.
  bool satisfies_bounds(const Box& control_box, double tol = 1e-12) const
  {
    for (std::size_t n = 0; n < beta_.size(); ++n) {
      if (!control_box.contains(std::span<const double>(alpha_.data() + n * m_, m_), tol)) return false;
      if (std::abs(beta_[n]) > beta_bound_ + tol) return false;
    }
    return true;
  }

private:
  template <class Visit>
  void blend(double t, double y, double z, Visit&& visit) const
  {
    const auto [i, wt] = t_.locate(t);
    const auto [j, wy] = y_.locate(y);
    const auto [k, wz] = z_.locate(z);
    for (int a = 0; a < 2; ++a) {
      const double fa = a ? wt : 1.0 - wt;
      if (fa == 0.0) continue;
      for (int b = 0; b < 2; ++b) {
        const double fb = b ? wy : 1.0 - wy;
        if (fb == 0.0) continue;
        for (int c = 0; c < 2; ++c) {
          const double fc = c ? wz : 1.0 - wz;
          if (fc == 0.0) continue;
          visit(node(i + a, j + b, k + c), fa * fb * fc);
        }
      }
    }
  }

  UniformGrid t_, y_, z_;
  std::size_t m_ = 1;
  double beta_bound_ = 0.0;
  std::vector<double> alpha_; // (t, y, z, control)
  std::vector<double> beta_;  // (t, y, z)
};

static_assert(FeedbackPolicy<PolicyField>);

} // namespace oce

#endif // OCE_POLICY_HPP
