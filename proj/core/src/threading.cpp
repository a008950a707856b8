#include "wldecode/threading.hpp"

#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wld {

void parallel_for(int n, int n_threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (n_threads <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  int workers = std::min(n_threads, n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::exception_ptr first_error;
  std::mutex error_mutex;

  int base = n / workers;
  int extra = n % workers;
  int start = 0;
  for (int w = 0; w < workers; ++w) {
    int count = base + (w < extra ? 1 : 0);
    int begin = start;
    int end = start + count;
    start = end;
    pool.emplace_back([&, begin, end] {
      try {
        for (int i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace wld
