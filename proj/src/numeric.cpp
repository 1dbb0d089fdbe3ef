#include "zitterlab/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

namespace zitterlab {

namespace {

constexpr std::size_t kBlockSize = 1024;

std::size_t initial_workers() {
  if (const char* env = std::getenv("ZITTERLAB_THREADS")) {
    const long value = std::strtol(env, nullptr, 10);
    if (value > 0) return static_cast<std::size_t>(value);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::atomic<std::size_t>& workers_setting() {
  static std::atomic<std::size_t> workers{initial_workers()};
  return workers;
}

std::mutex& warning_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& warning_handler() {
  // The default sink prints each distinct message once.
  static WarningHandler handler = [](const std::string& message) {
    static std::set<std::string> seen;
    if (seen.insert(message).second) std::cerr << "warning: " << message << '\n';
  };
  return handler;
}

}  // namespace

std::size_t worker_count() { return workers_setting().load(); }

void set_worker_count(std::size_t workers) { workers_setting().store(std::max<std::size_t>(1, workers)); }

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t blocks = (count + kBlockSize - 1) / kBlockSize;
  const std::size_t workers = std::min(worker_count(), blocks);
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) body(b * kBlockSize, std::min(count, (b + 1) * kBlockSize));
    return;
  }
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t b = next++; b < blocks; b = next++) {
      body(b * kBlockSize, std::min(count, (b + 1) * kBlockSize));
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
}

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(warning_mutex());
  std::swap(warning_handler(), handler);
  return handler;
}

void warn(const std::string& message) {
  std::lock_guard lock(warning_mutex());
  if (warning_handler()) warning_handler()(message);
}

}  // namespace zitterlab
