#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace advkt {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Static contiguous partition of [0, n) over `threads` workers.
// f(thread_index, begin, end) runs on its own thread; chunk boundaries depend
// only on (n, threads), so per-thread work assignment is deterministic.
template <typename F>
void parallel_chunks(int n, int threads, F&& f) {
    threads = std::max(1, std::min(threads, n));
    if (threads <= 1) {
        if (n > 0) f(0, 0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    const int base = n / threads;
    const int rem = n % threads;
    int begin = 0;
    for (int t = 0; t < threads; ++t) {
        const int len = base + (t < rem ? 1 : 0);
        const int end = begin + len;
        pool.emplace_back([&f, t, begin, end] { f(t, begin, end); });
        begin = end;
    }
    for (auto& th : pool) th.join();
}

}  // namespace advkt
