#pragma once

// Deterministic batched parallelism for element loops. Work is split into
// fixed-size batches; workers pull batches from an atomic counter and write
// into per-batch state, which callers merge in batch order. Results are
// therefore bitwise identical for any thread count.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace hexpde {

inline constexpr std::size_t kElementBatch = 2048;

inline int default_threads() {
  if (const char* env = std::getenv("HEXPDE_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

// fn(batch_index, begin, end) must only touch state owned by its batch.
// The lowest-batch exception, if any, is rethrown after all workers join.
template <class Fn>
void parallel_batches(std::size_t count, std::size_t batch_size, int threads,
                      Fn&& fn) {
  if (count == 0) return;
  const std::size_t n_batches = (count + batch_size - 1) / batch_size;
  if (threads <= 1 || n_batches == 1) {
    for (std::size_t b = 0; b < n_batches; ++b)
      fn(b, b * batch_size, std::min((b + 1) * batch_size, count));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> first_error{n_batches};
  std::vector<std::exception_ptr> errors(n_batches);
  auto worker = [&] {
    for (std::size_t b = next.fetch_add(1); b < n_batches;
         b = next.fetch_add(1)) {
      try {
        fn(b, b * batch_size, std::min((b + 1) * batch_size, count));
      } catch (...) {
        errors[b] = std::current_exception();
        std::size_t prev = first_error.load();
        while (b < prev && !first_error.compare_exchange_weak(prev, b)) {
        }
      }
    }
  };
  const int n_workers =
      static_cast<int>(std::min<std::size_t>(threads, n_batches));
  std::vector<std::thread> pool;
  pool.reserve(n_workers - 1);
  for (int t = 1; t < n_workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  const std::size_t eb = first_error.load();
  if (eb < n_batches) std::rethrow_exception(errors[eb]);
}

}  // namespace hexpde
