#ifndef OCE_SDE_HPP
#define OCE_SDE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "oce/parallel.hpp"
#include "oce/policy.hpp"
#include "oce/problem.hpp"

namespace oce {

struct SimParams {
  std::size_t n_paths = 10000;
  std::size_t n_steps = 100;
  bool keep_paths = false; // store every step, not only the terminal values
};

/// Initial condition (s, y, z). simulate_z reads beta at the frozen state y.
struct StartPoint {
  double t = 0.0;
  std::vector<double> y{0.0};
  double z = 1.0;
};

/// Seeded Euler-Maruyama ensemble.
struct PathBatch {
  std::uint64_t seed = 0;
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  std::size_t dim = 1;
  double t0 = 0.0;
  double dt = 0.0;

  std::vector<double> y_paths;           // (path, step 0..n_steps, dim), only with keep_paths
  std::vector<double> z_paths;           // (path, step 0..n_steps), only with keep_paths
  std::vector<double> y_terminal;        // (path, dim)
  std::vector<double> z_terminal;        // (path), empty unless Z was simulated
  std::vector<double> brownian_terminal; // (path, dim): W_T - W_s
  std::size_t exit_count = 0;            // paths clamped back into y_box at least once

  bool has_z() const { return !z_terminal.empty(); }
  double y_at(std::size_t path, std::size_t step, std::size_t c = 0) const
  {
    return y_paths[(path * (n_steps + 1) + step) * dim + c];
  }
  double z_at(std::size_t path, std::size_t step) const { return z_paths[path * (n_steps + 1) + step]; }
};

/// Independent stream per path derived from (seed, path index).
inline std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
  return std::mt19937_64(seq);
}

namespace detail {

enum class SimMode { state, tilted, density };

template <FeedbackPolicy Policy>
PathBatch simulate(const ControlProblem* problem, const Policy& policy, const StartPoint& start, double horizon,
                   const SimParams& params, std::uint64_t seed, SimMode mode)
{
  if (params.n_paths == 0 || params.n_steps == 0)
    throw std::invalid_argument("simulate: need at least one path and one step");
  if (!(horizon > start.t)) throw std::invalid_argument("simulate: start time must precede the horizon");

  const std::size_t d = start.y.size();
  const std::size_t m = problem ? problem->control_dim() : 0;
  if (problem) {
    if (d != problem->state_dim) throw std::invalid_argument("simulate: start state has the wrong dimension");
    if (!problem->y_box.contains(start.y)) throw std::invalid_argument("simulate: start state outside y_box");
  }
  if (mode == SimMode::density && !(start.z > 0.0)) throw std::invalid_argument("simulate_z: z must be positive");

  PathBatch batch;
  batch.seed = seed;
  batch.n_paths = params.n_paths;
  batch.n_steps = params.n_steps;
  batch.dim = d;
  batch.t0 = start.t;
  batch.dt = (horizon - start.t) / static_cast<double>(params.n_steps);
  const std::size_t stride = params.n_steps + 1;
  const bool with_z = mode == SimMode::density;
  batch.y_terminal.resize(params.n_paths * d);
  batch.brownian_terminal.resize(params.n_paths * d);
  if (with_z) batch.z_terminal.resize(params.n_paths);
  if (params.keep_paths) {
    batch.y_paths.resize(params.n_paths * stride * d);
    if (with_z) batch.z_paths.resize(params.n_paths * stride);
  }
  std::vector<unsigned char> exited(params.n_paths, 0);

  const double dt = batch.dt;
  const double sqdt = std::sqrt(dt);

  parallel_for(params.n_paths, [&](std::size_t p) {
    auto rng = path_rng(seed, p);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> y = start.y, a(m), b(d, 0.0), beta(d, 0.0), dw(d), wsum(d, 0.0);
    double z = start.z;
    const double z_ref = 1.0;

    if (params.keep_paths) {
      for (std::size_t c = 0; c < d; ++c) batch.y_paths[p * stride * d + c] = y[c];
      if (with_z) batch.z_paths[p * stride] = z;
    }
    for (std::size_t k = 0; k < params.n_steps; ++k) {
      const double t = start.t + static_cast<double>(k) * dt;
      for (std::size_t c = 0; c < d; ++c) {
        dw[c] = sqdt * normal(rng);
        wsum[c] += dw[c];
      }

      if (mode == SimMode::density) {
        policy.adversary(t, y, z, beta);
        double expo = 0.0;
        for (std::size_t c = 0; c < d; ++c) expo += beta[c] * dw[c] - 0.5 * beta[c] * beta[c] * dt;
        z *= std::exp(expo);
      } else {
        policy.control(t, y, z_ref, a);
        problem->control_box.clamp(a);
        problem->drift(t, y, a, b);
        if (mode == SimMode::tilted) {
          policy.adversary(t, y, z_ref, beta);
          // drift + sigma sigma' beta
          for (std::size_t r = 0; r < d; ++r) {
            double tilt = 0.0;
            for (std::size_t q = 0; q < d; ++q) {
              double ss = 0.0;
              for (std::size_t u = 0; u < d; ++u) ss += problem->sigma[r * d + u] * problem->sigma[q * d + u];
              tilt += ss * beta[q];
            }
            b[r] += tilt;
          }
        }
        for (std::size_t r = 0; r < d; ++r) {
          double noise = 0.0;
          for (std::size_t q = 0; q < d; ++q) noise += problem->sigma[r * d + q] * dw[q];
          y[r] += b[r] * dt + noise;
        }
        if (problem->y_box.clamp(y)) exited[p] = 1;
      }

      if (params.keep_paths) {
        for (std::size_t c = 0; c < d; ++c) batch.y_paths[(p * stride + k + 1) * d + c] = y[c];
        if (with_z) batch.z_paths[p * stride + k + 1] = z;
      }
    }
    for (std::size_t c = 0; c < d; ++c) {
      batch.y_terminal[p * d + c] = y[c];
      batch.brownian_terminal[p * d + c] = wsum[c];
    }
    if (with_z) batch.z_terminal[p] = z;
  });

  for (unsigned char e : exited) batch.exit_count += e;
  return batch;
}

} // namespace detail

/// Euler-Maruyama for dY = b(t, Y, alpha) dt + sigma dW, with alpha read from
/// the policy at the reference density level z = 1.
template <FeedbackPolicy Policy>
PathBatch simulate_y(const ControlProblem& problem, const Policy& policy, const StartPoint& start,
                     const SimParams& params, std::uint64_t seed)
{
  return detail::simulate(&problem, policy, start, problem.horizon, params, seed, detail::SimMode::state);
}

/// Exact exponential step for dZ = beta Z dW, so Z stays positive.
template <FeedbackPolicy Policy>
PathBatch simulate_z(double horizon, const Policy& policy, const StartPoint& start, const SimParams& params,
                     std::uint64_t seed)
{
  return detail::simulate(nullptr, policy, start, horizon, params, seed, detail::SimMode::density);
}

/// State dynamics under the adversary's measure: drift b + sigma sigma' beta.
template <FeedbackPolicy Policy>
PathBatch simulate_tilted(const ControlProblem& problem, const Policy& policy, const StartPoint& start,
                          const SimParams& params, std::uint64_t seed)
{
  return detail::simulate(&problem, policy, start, problem.horizon, params, seed, detail::SimMode::tilted);
}

struct SampleStats {
  double mean = 0.0;
  double variance = 0.0; // unbiased
  double stderr_mean = 0.0;
};

inline SampleStats sample_stats(std::span<const double> xs)
{
  SampleStats s;
  const auto n = static_cast<double>(xs.size());
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= n;
  if (xs.size() > 1) {
    for (double x : xs) s.variance += (x - s.mean) * (x - s.mean);
    s.variance /= (n - 1.0);
  }
  s.stderr_mean = std::sqrt(s.variance / n);
  return s;
}

} // namespace oce

#endif // OCE_SDE_HPP
