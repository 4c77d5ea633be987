#ifndef OCE_OCE_HPP
#define OCE_OCE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "oce/extended_real.hpp"
#include "oce/loss.hpp"
#include "oce/scalar_min.hpp"

namespace oce {

/// Finitely supported law of X: outcomes with nonnegative weights summing to one.
class EmpiricalDistribution {
public:
  EmpiricalDistribution() = default;

  EmpiricalDistribution(std::vector<double> outcomes, std::vector<double> weights)
      : outcomes_(std::move(outcomes)), weights_(std::move(weights))
  {
    if (outcomes_.empty()) throw std::invalid_argument("EmpiricalDistribution: no outcomes");
    if (outcomes_.size() != weights_.size())
      throw std::invalid_argument("EmpiricalDistribution: outcomes and weights differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (!(weights_[i] >= 0.0)) throw std::invalid_argument("EmpiricalDistribution: negative weight");
      if (!std::isfinite(outcomes_[i]))
        throw std::invalid_argument("EmpiricalDistribution: non-finite outcome");
      total += weights_[i];
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("EmpiricalDistribution: weights must sum to 1");
  }

  /// Equal weights 1/n.
  static EmpiricalDistribution uniform(std::vector<double> outcomes)
  {
    const std::size_t n = outcomes.size();
    if (n == 0) throw std::invalid_argument("EmpiricalDistribution: no outcomes");
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    // Push the rounding residue into one weight so the sum is 1 to the last bit we can get.
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    w.back() += 1.0 - total;
    return {std::move(outcomes), std::move(w)};
  }

  const std::vector<double>& outcomes() const { return outcomes_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return outcomes_.size(); }

  double min() const { return *std::min_element(outcomes_.begin(), outcomes_.end()); }
  double max() const { return *std::max_element(outcomes_.begin(), outcomes_.end()); }

  double mean() const
  {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) m += weights_[i] * outcomes_[i];
    return m;
  }

private:
  std::vector<double> outcomes_;
  std::vector<double> weights_;
};

struct OceResult {
  double value = 0.0;
  double r_star = 0.0;
  std::size_t iterations = 0;
};

/// rho(X) = inf_r ( E[l(X - r)] + r ), by bracketing and golden section on r.
/// The minimiser always lies in [min X, max X] for a normalised loss, so the
/// initial bracket [min X - 1, max X + 1] only grows for losses that break the
/// assumptions; 60 doublings without success is reported as an error.
inline OceResult oce_primal(const EmpiricalDistribution& dist, const LossSpec& spec, double tol = 1e-10)
{
  if (!(tol > 0.0)) throw std::invalid_argument("oce_primal: tol must be positive");
  const auto& x = dist.outcomes();
  const auto& w = dist.weights();
  auto objective = [&](double r) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * spec.l(x[i] - r);
    return s + r;
  };

  Bracket br;
  try {
    br = bracket_convex_minimum(objective, dist.min() - 1.0, dist.max() + 1.0, 60);
  } catch (const std::runtime_error&) {
    throw std::runtime_error("oce_primal: no minimum in r after 60 bracket expansions (loss '"
                             + spec.name + "' violates the loss assumptions?)");
  }
  const auto m = golden_section_minimize(objective, br.lo, br.hi, tol, 10000);
  return {m.value, m.x, m.iterations};
}

namespace detail {

/// argmax over dom(l*) of z u - l*(z).
inline double conj_argmax(const LossSpec& spec, double u)
{
  const Interval dom = spec.conj_domain;
  if (spec.derivative) return std::clamp(spec.derivative(u), dom.lo, dom.hi);

  auto neg = [&](double z) { return -(z * u - spec.l_conj(z)); };
  double hi = dom.hi;
  if (!std::isfinite(hi)) {
    hi = std::max(dom.lo + 1.0, 2.0);
    std::size_t k = 0;
    while (neg(hi) < neg(0.5 * (dom.lo + hi)) && k++ < 60) hi *= 2.0;
  }
  return golden_section_minimize(neg, dom.lo, hi, 1e-13 * std::max(1.0, hi)).x;
}

} // namespace detail

/// Discrete dual: max sum_i w_i (z_i x_i - l*(z_i)) over z_i in dom(l*) with
/// sum_i w_i z_i = 1. Bisection on the multiplier lambda of the mass
/// constraint; the two bracketing primal points are mixed so the constraint
/// holds exactly, which takes care of atoms at a kink of l.
inline double oce_dual_discrete(const EmpiricalDistribution& dist, const LossSpec& spec, double tol = 1e-10)
{
  if (!(tol > 0.0)) throw std::invalid_argument("oce_dual_discrete: tol must be positive");
  if (!spec.in_domain(1.0))
    throw std::runtime_error("oce_dual_discrete: 1 is not in dom(l*), the program is infeasible");

  const auto& x = dist.outcomes();
  const auto& w = dist.weights();
  const std::size_t n = x.size();

  auto densities = [&](double lambda, std::vector<double>& z) {
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = detail::conj_argmax(spec, x[i] - lambda);
      mass += w[i] * z[i];
    }
    return mass;
  };

  std::vector<double> z_lo(n), z_hi(n);
  double lo = dist.min() - 1.0;
  double hi = dist.max() + 1.0;
  double m_lo = densities(lo, z_lo);
  double m_hi = densities(hi, z_hi);
  for (std::size_t k = 0; m_lo < 1.0 && k < 60; ++k) {
    lo -= (hi - lo);
    m_lo = densities(lo, z_lo);
  }
  for (std::size_t k = 0; m_hi > 1.0 && k < 60; ++k) {
    hi += (hi - lo);
    m_hi = densities(hi, z_hi);
  }
  if (m_lo < 1.0 || m_hi > 1.0)
    throw std::runtime_error("oce_dual_discrete: could not bracket the mass multiplier");

  // Mass is nonincreasing in lambda.
  const double lambda_tol = tol / 10.0;
  std::vector<double> z_mid(n);
  while (hi - lo > lambda_tol * std::max(1.0, std::abs(lo))) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double m = densities(mid, z_mid);
    if (m >= 1.0) {
      lo = mid;
      m_lo = m;
      std::swap(z_lo, z_mid);
    } else {
      hi = mid;
      m_hi = m;
      std::swap(z_hi, z_mid);
    }
  }

  const double theta = (m_lo == m_hi) ? 1.0 : (1.0 - m_hi) / (m_lo - m_hi);
  double value = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // The convex mix can step off a domain edge by one ulp.
    const double zi = std::clamp(theta * z_lo[i] + (1.0 - theta) * z_hi[i], spec.conj_domain.lo, spec.conj_domain.hi);
    value = ext_add(value, w[i] * zi * x[i] - ext_mul(w[i], spec.l_conj(zi)));
  }
  return value;
}

/// Average value-at-risk at tail mass gamma: the mean of the worst gamma
/// share of X, splitting the atom at the quantile.
inline double avar_closed_form(const EmpiricalDistribution& dist, double gamma)
{
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("avar_closed_form: gamma must lie in (0,1)");
  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& x = dist.outcomes();
  const auto& w = dist.weights();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] > x[b]; });

  double remaining = gamma;
  double acc = 0.0;
  for (std::size_t idx : order) {
    const double take = std::min(w[idx], remaining);
    acc += take * x[idx];
    remaining -= take;
    if (remaining <= 0.0) break;
  }
  return acc / gamma;
}

} // namespace oce

#endif // OCE_OCE_HPP
