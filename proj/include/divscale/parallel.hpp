#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace divscale {

inline std::size_t resolve_jobs(std::size_t jobs) {
    if (jobs > 0) return jobs;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads (0 = hardware threads).
/// Callers write results into slot i, so output order never depends on
/// scheduling. If any call throws, the exception of the lowest failing index
/// is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    if (n == 0) return;
    const std::size_t workers = std::min(resolve_jobs(jobs), n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::exception_ptr> errors(n);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                    if (failed.load(std::memory_order_relaxed)) continue;
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                        failed.store(true, std::memory_order_relaxed);
                    }
                }
            });
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace divscale
