#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rhsim {

/// Runs fn(0..count-1) on up to `jobs` threads. Results are returned in index
/// order, so the outcome does not depend on scheduling. The first exception
/// thrown by any replica is rethrown after all threads have joined.
template <typename T>
std::vector<T> run_replicas(int count, int jobs, const std::function<T(int)>& fn) {
  std::vector<T> out(static_cast<std::size_t>(std::max(count, 0)));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int k = next++; k < count; k = next++) {
      try {
        out[static_cast<std::size_t>(k)] = fn(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, std::max(count, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace rhsim
