#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace boxfuse {

/// Resolves a requested thread count: 0 means BOXFUSE_THREADS or hardware concurrency.
unsigned resolve_thread_count(unsigned requested);

/// Runs body(i) for i in [0, n) over contiguous static chunks. Each index is
/// visited exactly once, so writes into per-index slots are scheduling
/// independent. The first exception thrown by any worker is rethrown.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = n * w / workers;
        const std::size_t end = n * (w + 1) / workers;
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace boxfuse
