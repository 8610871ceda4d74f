// Deterministic index-parallel loop: body(i) runs once for each i in [0, n),
// partitioned across worker threads.  Results must be written to per-index
// slots so the outcome is independent of the schedule.  The first exception
// thrown by any body is rethrown on the calling thread.
#pragma once

#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace robsur {

inline void parallel_for(int n, int threads,
                         const std::function<void(int)>& body) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::mutex mu;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  const int workers = std::min(threads, n);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) body(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace robsur
