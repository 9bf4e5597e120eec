#include "regenn/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace regenn {

namespace {
std::atomic<std::size_t> g_max_threads{1};
constexpr std::size_t kMinChunk = 2048;
} // namespace

void set_max_threads(std::size_t n) { g_max_threads.store(n == 0 ? 1 : n); }
std::size_t max_threads() { return g_max_threads.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    const std::size_t threads = std::min(g_max_threads.load(), n / kMinChunk);
    if (threads <= 1) {
        if (n > 0) fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

} // namespace regenn
