#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace noisyor {

/// Worker count: NOISYOR_THREADS if set and positive, else hardware concurrency.
inline int thread_count() {
    if (const char* env = std::getenv("NOISYOR_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v > 0) return v;
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(begin, end) over contiguous chunks of [0, count). Chunks write
/// disjoint output, so results do not depend on scheduling. The first
/// exception thrown by any chunk is rethrown on the calling thread.
template <typename Body>
void parallel_chunks(std::int64_t count, Body&& body, int threads = thread_count()) {
    if (count <= 0) return;
    const std::int64_t workers = std::clamp<std::int64_t>(threads, 1, count);
    if (workers == 1) {
        body(std::int64_t{0}, count);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (std::int64_t w = 0; w < workers; ++w) {
        const std::int64_t begin = count * w / workers;
        const std::int64_t end = count * (w + 1) / workers;
        pool.emplace_back([&, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace noisyor
