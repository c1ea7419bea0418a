#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace qcomp {

/// Worker count for `requested` (0 means hardware concurrency).
inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Calls fn(chunk, begin, end) over `chunks` fixed, equal-size chunks of
/// [0, n). Chunk boundaries depend only on n and `chunks`, never on the
/// thread count, so reductions done per chunk are reproducible.
inline void parallel_chunks(std::size_t n, std::size_t chunks, std::size_t threads,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  chunks = std::clamp<std::size_t>(chunks, 1, n);
  const std::size_t per = (n + chunks - 1) / chunks;
  chunks = (n + per - 1) / per;
  threads = std::min(resolve_threads(threads), chunks);
  if (threads <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c, c * per, std::min(n, (c + 1) * per));
    return;
  }
  std::mutex mu;
  std::exception_ptr first_error;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t c;
      {
        std::lock_guard lock(mu);
        if (next >= chunks || first_error) return;
        c = next++;
      }
      try {
        fn(c, c * per, std::min(n, (c + 1) * per));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (first_error) std::rethrow_exception(first_error);
}

/// Element-wise parallel loop; fn(i) must only write state owned by i.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t t = resolve_threads(threads);
  parallel_chunks(n, t == 1 ? 1 : t * 8, t, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) fn(i);
  });
}

}  // namespace qcomp
