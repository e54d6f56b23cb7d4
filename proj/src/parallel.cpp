#include "marketeq/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace marketeq {

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

std::optional<std::uint64_t> first_success(
    std::uint64_t count, unsigned threads,
    const std::function<bool(std::uint64_t)>& probe) {
  threads = resolve_threads(threads);
  const std::uint64_t kNone = count;

  if (threads == 1 || count <= 1) {
    for (std::uint64_t i = 0; i < count; ++i)
      if (probe(i)) return i;
    return std::nullopt;
  }

  constexpr std::uint64_t kChunk = 16;
  std::atomic<std::uint64_t> next{0};
  std::atomic<std::uint64_t> best{kNone};
  std::mutex error_mutex;
  std::exception_ptr error;

  auto worker = [&]() {
    try {
      for (;;) {
        const std::uint64_t start = next.fetch_add(kChunk);
        if (start >= count || start >= best.load()) return;
        const std::uint64_t stop = std::min(start + kChunk, count);
        for (std::uint64_t i = start; i < stop; ++i) {
          if (i >= best.load()) return;
          if (!probe(i)) continue;
          std::uint64_t cur = best.load();
          while (i < cur && !best.compare_exchange_weak(cur, i)) {
          }
          break;  // later indices in this chunk cannot beat i
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      best.store(0);  // make everyone bail out fast
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  if (error) std::rethrow_exception(error);
  const std::uint64_t found = best.load();
  if (found == kNone) return std::nullopt;
  return found;
}

}  // namespace marketeq
