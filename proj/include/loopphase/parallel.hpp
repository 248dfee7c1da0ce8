#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace loopphase {

/// Number of workers to use for a parallelism hint. 0 means "all hardware threads".
inline unsigned resolve_jobs(unsigned hint) {
  if (hint != 0) return hint;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Split [0, n) into contiguous chunks and run `body(begin, end)` on each.
/// Chunks never overlap and each index is visited once, so per-index work is
/// identical regardless of the worker count.
template <class Body>
void parallel_for(std::size_t n, unsigned jobs, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(resolve_jobs(jobs), std::max<std::size_t>(n, 1));
  if (workers <= 1 || n < 1024) {
    body(std::size_t{0}, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
}

} // namespace loopphase
