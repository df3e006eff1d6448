#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <vector>

namespace stickylab {

// Worker pool size. Defaults to STICKYLAB_THREADS when set, else the hardware
// concurrency. Never influences results: work is split by index and written
// into index-addressed slots.
std::size_t worker_count();
// 0 restores the environment/hardware default.
void set_worker_count(std::size_t n);

// Calls body(i) for i in [0, n) across the worker pool. The first exception
// raised (lowest index) is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

template <class R, class F>
std::vector<R> parallel_map(std::size_t n, F&& fn) {
  std::vector<R> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

}  // namespace stickylab
