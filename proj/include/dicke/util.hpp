#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace dicke {

/// FNV-1a 64-bit hash of a byte range.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  return fnv1a64(s.data(), s.size());
}

/// Order-sensitive accumulator for building cache keys out of mixed fields.
class HashStream {
 public:
  void add_u64(std::uint64_t v) { h_ = fnv1a64(&v, sizeof v, h_); }
  void add_i32(std::int32_t v) { add_u64(static_cast<std::uint64_t>(static_cast<std::uint32_t>(v))); }
  void add_f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    add_u64(bits);
  }
  [[nodiscard]] std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

/// Worker count used when a caller passes 0: DICKE_WORKERS env var if set,
/// otherwise hardware concurrency.
inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DICKE_WORKERS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1u;
}

/// Runs f(i) for i in [0, n). Work items are claimed from a shared atomic
/// counter, so the assignment of items to threads is load-driven; callers
/// must make item results independent of execution order.
/// The first exception thrown by any worker is rethrown on the caller.
template <typename F>
void parallel_for(std::size_t n, F&& f, unsigned workers = 0) {
  workers = resolve_workers(workers);
  if (n == 0) return;
  if (workers <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  unsigned count = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::atomic<unsigned> error_guard{0};
  auto body = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        f(i);
      } catch (...) {
        if (error_guard.fetch_add(1) == 0) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  pool.reserve(count);
  for (unsigned t = 0; t < count; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace dicke
