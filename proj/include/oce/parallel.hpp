#ifndef OCE_PARALLEL_HPP
#define OCE_PARALLEL_HPP

#include <cstddef>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace oce {

namespace detail {
inline int& worker_slot()
{
  static int workers = 0; // 0 = runtime default (all cores)
  return workers;
}
} // namespace detail

/// Worker count used by every parallel map in the library. 0 restores the default.
inline void set_workers(int n) { detail::worker_slot() = n < 0 ? 0 : n; }

inline int workers()
{
  const int w = detail::worker_slot();
#ifdef _OPENMP
  return w > 0 ? w : omp_get_max_threads();
#else
  return w > 0 ? w : 1;
#endif
}

/// Parallel map over [0, n). The body must not throw. Iterations are
/// independent, so results do not depend on the worker count.
template <class F>
void parallel_for(std::size_t n, F&& body)
{
  const auto count = static_cast<std::int64_t>(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(workers())
#endif
  for (std::int64_t i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
}

} // namespace oce

#endif // OCE_PARALLEL_HPP
