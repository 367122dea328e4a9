#include "gmmot/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

namespace gmmot {

namespace {

int default_threads() {
  if (const char* env = std::getenv("GMMOT_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::atomic<int>& thread_slot() {
  static std::atomic<int> n{default_threads()};
  return n;
}

}  // namespace

int thread_count() { return thread_slot().load(std::memory_order_relaxed); }

void set_thread_count(int n) {
  thread_slot().store(n < 1 ? 1 : n, std::memory_order_relaxed);
}

}  // namespace gmmot
