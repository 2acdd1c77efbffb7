#include "pff/parallel.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace pff {

namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) { g_threads.store(n < 1 ? 1 : n); }

int num_threads() { return g_threads.load(); }

void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t)>& fn) {
    const int64_t n = end - begin;
    if (n <= 0) return;
    const int workers = std::min<int64_t>(num_threads(), n);
    if (workers <= 1 || n < 2) {
        for (int64_t i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int64_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int64_t lo = begin + w * chunk;
        const int64_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace pff
