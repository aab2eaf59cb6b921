#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace thermoflow {

// Worker count: THERMOFLOW_THREADS when set to a positive integer, otherwise
// the hardware concurrency.
inline unsigned thread_count() {
    if (const char* env = std::getenv("THERMOFLOW_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n) on up to thread_count() threads. Each index is
// handled exactly once; the first exception thrown is rethrown after joining.
template <typename Fn>
void parallel_for(long n, Fn&& fn) {
    const long workers = std::min<long>(static_cast<long>(thread_count()), n);
    if (workers <= 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (long w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (long i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace thermoflow
