#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace s2m {

/// Worker count: S2M_THREADS caps parallelism (0 or unset = hardware).
inline int worker_count() {
    if (const char* env = std::getenv("S2M_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

/// Runs fn(i) for i in [0, n). Each index must be independent and write only
/// to its own slot, so results do not depend on the thread count.
template <typename F>
void parallel_for(int n, F&& fn) {
    const int workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace s2m
