#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace floodtree {

// Static range split over worker threads. Each index is written by exactly
// one worker, so results do not depend on the thread count.
template <typename Fn>
void parallel_for(std::int64_t begin, std::int64_t end, int threads, Fn&& fn) {
    const std::int64_t n = end - begin;
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    if (threads == 1 || n < 4096) {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
        return;
    }
    const std::int64_t chunk = (n + threads - 1) / threads;
    std::vector<std::thread> workers;
    for (int t = 0; t < threads; ++t) {
        std::int64_t lo = begin + t * chunk;
        std::int64_t hi = lo + chunk < end ? lo + chunk : end;
        if (lo >= hi) break;
        workers.emplace_back([lo, hi, &fn] {
            for (std::int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& w : workers) w.join();
}

}  // namespace floodtree
