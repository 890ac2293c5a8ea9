#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kpos {

// Calls f(i) for i in [0, n) on up to `jobs` threads. Results must be written
// by index so the outcome does not depend on scheduling. The first exception
// (lowest index) is rethrown after all threads finish.
template <class F>
void parallel_for(size_t n, int jobs, F&& f) {
  if (jobs <= 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::mutex mu;
  std::exception_ptr err;
  size_t err_index = n;
  auto worker = [&] {
    for (size_t i = next++; i < n; i = next++) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  const size_t count = std::min(static_cast<size_t>(jobs), n);
  std::vector<std::thread> pool;
  for (size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace kpos
