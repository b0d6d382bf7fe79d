#ifndef KGPATH_PARALLEL_HPP
#define KGPATH_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kgpath {

/// Splits [0, count) into `workers` contiguous chunks and runs
/// fn(worker, begin, end) for each on its own thread. Chunk boundaries depend
/// only on (count, workers). The first exception thrown by a worker is
/// rethrown on the calling thread.
template <class Fn>
void parallel_chunks(std::size_t count, int workers, Fn&& fn) {
  const auto n_workers = static_cast<std::size_t>(std::max(1, workers));
  if (n_workers == 1 || count <= 1) {
    fn(std::size_t{0}, std::size_t{0}, count);
    return;
  }
  const std::size_t used = std::min(n_workers, count);
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(used);
  for (std::size_t w = 0; w < used; ++w) {
    const std::size_t begin = count * w / used;
    const std::size_t end = count * (w + 1) / used;
    threads.emplace_back([&, w, begin, end] {
      try {
        fn(w, begin, end);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

/// Runs fn(worker, index) for every index in [0, count), handing out indices
/// dynamically. Use only when the merged result is order-independent.
template <class Fn>
void parallel_for_dynamic(std::size_t count, int workers, Fn&& fn) {
  const auto n_workers = static_cast<std::size_t>(std::max(1, workers));
  if (n_workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(std::size_t{0}, i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < n_workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(w, i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace kgpath

#endif  // KGPATH_PARALLEL_HPP
