#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hypro {

inline constexpr const char* kThreadsEnv = "HYPRO_THREADS";

/// Worker count from HYPRO_THREADS, else all hardware threads.
[[nodiscard]] inline std::size_t thread_count() {
    if (const char* env = std::getenv(kThreadsEnv)) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<std::size_t>(v);
        } catch (...) {
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

namespace detail {
inline thread_local bool in_parallel_region = false;
} // namespace detail

/// Runs body(i) for i in [0, n). Each index writes only its own outputs, so results
/// never depend on scheduling. The exception from the lowest failing index is rethrown.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
    // Nested calls run inline on the current worker.
    const std::size_t workers = detail::in_parallel_region ? 1 : std::min(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_index = n;
    std::exception_ptr failure;
    auto run = [&] {
        const bool was_nested = detail::in_parallel_region;
        detail::in_parallel_region = true;
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
            }
        }
        detail::in_parallel_region = was_nested;
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace hypro
