#ifndef NSFEM_PARALLEL_HPP
#define NSFEM_PARALLEL_HPP

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace nsfem {

/// Worker cap from NONSMOOTH_FEM_THREADS (default 1).
inline int worker_count()
{
  const char* env = std::getenv("NONSMOOTH_FEM_THREADS");
  if (env == nullptr) return 1;
  try {
    return std::max(1, std::stoi(env));
  } catch (const std::exception&) {
    return 1;
  }
}

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Results
/// must be written to per-index slots; the first exception is rethrown.
template <class Body>
void parallel_for(int n, Body&& body)
{
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::mutex lock;
  int next = 0;
  std::exception_ptr failure;
  auto worker = [&]() {
    for (;;) {
      int i = 0;
      {
        std::lock_guard guard(lock);
        if (next >= n || failure) return;
        i = next++;
      }
      try {
        body(i);
      } catch (...) {
        std::lock_guard guard(lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace nsfem

#endif  // NSFEM_PARALLEL_HPP
