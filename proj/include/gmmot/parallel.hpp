#pragma once

#include <cstddef>

namespace gmmot {

/// Number of threads the parallel kernels use. Defaults to the machine
/// parallelism, or the GMMOT_THREADS environment variable when set.
int thread_count();

/// Override the thread count (values < 1 are clamped to 1).
void set_thread_count(int n);

/// Runs body(i) for i in [0, n). Iterations must be independent; callers that
/// reduce must write per-index slots and fold them serially afterwards so the
/// result does not depend on the thread count.
template <class Body>
void parallel_for(std::size_t n, const Body& body);

}  // namespace gmmot

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gmmot {

template <class Body>
void parallel_for(std::size_t n, const Body& body) {
#ifdef _OPENMP
  const int threads = thread_count();
  if (threads > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(threads)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      body(static_cast<std::size_t>(i));
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace gmmot
