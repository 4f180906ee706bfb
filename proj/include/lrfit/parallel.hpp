#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace lrfit
{

/// Number of worker threads for data-parallel loops. Capped by the
/// LRFIT_THREADS environment variable when set.
inline int thread_count()
{
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("LRFIT_THREADS"))
  {
    const int cap = std::atoi(env);
    if (cap > 0)
      n = std::min(n, cap);
  }
  return n;
}

/// Run body(i) for i in [0, n). Work is cut into fixed chunks independent
/// of the thread count, so callers that reduce per-chunk results in chunk
/// order get identical sums for any LRFIT_THREADS value.
template <typename Body>
void parallel_for(std::size_t n, Body&& body, std::size_t min_chunk = 256)
{
  const int threads = thread_count();
  if (threads <= 1 || n < 2 * min_chunk)
  {
    for (std::size_t i = 0; i < n; ++i)
      body(i);
    return;
  }
  const std::size_t n_workers = std::min<std::size_t>(threads, n / min_chunk);
  std::vector<std::thread> workers;
  workers.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w)
  {
    workers.emplace_back([&, w] {
      const std::size_t begin = n * w / n_workers;
      const std::size_t end = n * (w + 1) / n_workers;
      for (std::size_t i = begin; i < end; ++i)
        body(i);
    });
  }
  for (auto& t : workers)
    t.join();
}

} // namespace lrfit
