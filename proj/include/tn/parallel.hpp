#pragma once

#include <cstddef>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace tn {

/// Worker cap from the TN_THREADS environment variable; 0 or unset
/// means one worker per hardware thread.
inline std::size_t worker_count() {
    std::size_t n = 0;
    if (const char* env = std::getenv("TN_THREADS")) {
        n = static_cast<std::size_t>(std::strtoul(env, nullptr, 10));
    }
    if (n == 0) {
        n = std::thread::hardware_concurrency();
        if (n == 0) n = 1;
    }
    return n;
}

/// Runs fn(i) for i in [0, n) over worker_count() threads. Each index is
/// processed exactly once; fn must not share mutable state across indices.
/// Results keyed by index are deterministic regardless of scheduling.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace tn
