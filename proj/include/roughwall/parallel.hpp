#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace roughwall {

/// Runs body(k) for k in [0, count) on up to `workers` threads. Work units must write only to their own
/// slot; the first exception is rethrown after all threads join.
template <class F>
void parallel_for(int count, int workers, F&& body) {
  workers = std::clamp(workers, 1, std::max(count, 1));
  if (workers == 1) {
    for (int k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mutex;
  auto loop = [&] {
    for (int k = next++; k < count; k = next++) {
      try {
        body(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) pool.emplace_back(loop);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace roughwall
