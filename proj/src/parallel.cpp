#include "gwm/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <cstdlib>
#include <thread>
#include <vector>

namespace gwm {

int thread_count() {
  static const int cached = [] {
    int n = 0;
    if (const char* env = std::getenv("GWM_THREADS")) {
      n = std::atoi(env);
    }
    if (n <= 0) {
      n = static_cast<int>(std::thread::hardware_concurrency());
    }
    return n > 0 ? n : 1;
  }();
  return cached;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace gwm
