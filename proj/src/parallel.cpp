#include "daf/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace daf {

int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DAF_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(long n, int workers, const std::function<void(long)>& fn) {
  if (n <= 0) return;
  workers = std::clamp<long>(workers, 1, n);
  if (workers == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }

  std::mutex error_mutex;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  const long chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const long lo = w * chunk;
    const long hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (long i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace daf
