#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace effdyn::detail {

/// Splits [0, n) into `threads` contiguous chunks with fixed boundaries.
/// Each index is processed by exactly one invocation of fn(begin, end).
template <class Fn>
void parallel_chunks(std::int64_t n, int threads, Fn&& fn) {
  const int t = static_cast<int>(std::clamp<std::int64_t>(threads, 1, std::max<std::int64_t>(n, 1)));
  if (t == 1) {
    fn(std::int64_t{0}, n);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(t);
  for (int c = 0; c < t; ++c) {
    const std::int64_t begin = n * c / t;
    const std::int64_t end = n * (c + 1) / t;
    workers.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& w : workers) w.join();
}

} // namespace effdyn::detail
