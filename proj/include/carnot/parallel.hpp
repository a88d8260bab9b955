#pragma once

// Deterministic parallel loop: work items are partitioned statically, every
// worker writes only its own output slots, reductions happen on the caller
// thread in index order.

#include <algorithm>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace carnot {

inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                         int workers = 0) {
  if (workers <= 0) {
    const unsigned hc = std::thread::hardware_concurrency();
    workers = hc > 0 ? static_cast<int>(hc) : 2;
  }
  workers = static_cast<int>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace carnot
