#pragma once

#include <algorithm>
#include <cstddef>
#include <future>
#include <thread>
#include <type_traits>
#include <vector>

namespace perfml {

namespace detail {
inline thread_local bool inside_parallel_map = false;
}

/// Evaluates fn(0) .. fn(n-1) on worker threads and returns the results in
/// index order. Exceptions propagate from the lowest failing index. Nested
/// calls from a worker run serially.
template <class Fn>
auto parallel_map(std::size_t n, Fn&& fn) -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using R = std::invoke_result_t<Fn&, std::size_t>;
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), 16));
  std::vector<R> out;
  out.reserve(n);
  if (workers == 1 || n <= 1 || detail::inside_parallel_map) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
    return out;
  }
  for (std::size_t start = 0; start < n; start += workers) {
    const std::size_t end = std::min(n, start + workers);
    std::vector<std::future<R>> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(std::async(std::launch::async, [&fn, i] {
        detail::inside_parallel_map = true;
        return fn(i);
      }));
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

} // namespace perfml
