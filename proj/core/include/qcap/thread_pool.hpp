#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace qcap {

// parallel_for over [0, count): tasks are claimed by index from a shared
// counter, so any partial results must be written to per-index slots and
// reduced by the caller in index order. That keeps every reduction
// bit-identical no matter how many workers run (including jobs = 1, which
// executes inline).
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), count));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr error;
  for (int t = 0; t < workers; ++t) {
    threads.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next >= count || error) return;
          i = next++;
        }
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace qcap
