#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ovdd {

/// Fork-join loop: calls fn(k) for k in [0, count) on up to `workers`
/// threads and returns once every call has finished. Item k always runs on
/// worker k % workers, so per-item work never depends on the worker count.
/// The first exception thrown by any call is rethrown on the caller.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const std::size_t nw = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
  if (nw <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&](std::size_t w) {
    try {
      for (std::size_t k = w; k < count; k += nw) fn(k);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(nw - 1);
    for (std::size_t w = 1; w < nw; ++w) pool.emplace_back(run, w);
    run(0);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace ovdd
