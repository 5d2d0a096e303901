#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace curvmix {

// Parallelism cap: CURVMIX_THREADS if set, else hardware concurrency.
inline int thread_cap() {
    if (const char* env = std::getenv("CURVMIX_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// Runs fn(chunk_index, begin, end) over [0, n) split into fixed chunks.
// Chunk boundaries do not depend on the thread count, so chunk-local results
// combined in chunk order are deterministic.
inline void parallel_chunks(int64_t n, int64_t chunk_size,
                            const std::function<void(int, int64_t, int64_t)>& fn) {
    if (n <= 0) return;
    const int64_t num_chunks = (n + chunk_size - 1) / chunk_size;
    const int threads = static_cast<int>(std::min<int64_t>(thread_cap(), num_chunks));
    if (threads <= 1) {
        for (int64_t c = 0; c < num_chunks; ++c)
            fn(static_cast<int>(c), c * chunk_size, std::min(n, (c + 1) * chunk_size));
        return;
    }
    std::atomic<int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                int64_t c = next.fetch_add(1);
                if (c >= num_chunks) break;
                fn(static_cast<int>(c), c * chunk_size, std::min(n, (c + 1) * chunk_size));
            }
        });
    for (auto& th : pool) th.join();
}

}  // namespace curvmix
