#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace lsnn {

// Worker count from LSNN_WORKERS (default 1). Work is split into fixed chunks
// whose partial results are reduced in chunk order, so results never depend
// on this value.
inline int worker_count() {
  if (const char* env = std::getenv("LSNN_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return std::min(n, 256);
  }
  return 1;
}

// Calls fn(chunk) for chunk in [0, chunks).
template <class Fn>
void parallel_chunks(std::size_t chunks, Fn&& fn, int workers = worker_count()) {
  if (workers <= 1 || chunks <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c);
    return;
  }
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(workers), chunks);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(n);
  pool.reserve(n);
  for (std::size_t w = 0; w < n; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t c = w; c < chunks; c += n) fn(c);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace lsnn
