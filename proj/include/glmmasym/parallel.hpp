#ifndef GLMMASYM_PARALLEL_HPP
#define GLMMASYM_PARALLEL_HPP

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

// Work-stealing-free parallel loop over an index range. Each task must own
// its state (RNG substream, buffers); results written to pre-sized slots
// keep output independent of scheduling.

namespace glmmasym {

inline int thread_count_from_env(int fallback = 0) {
    if (const char* env = std::getenv("GLMM_ASYM_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    if (fallback >= 1) return fallback;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

inline void parallel_for(long count, const std::function<void(long)>& body, int threads = 0) {
    if (threads <= 0) threads = thread_count_from_env();
    if (threads == 1 || count <= 1) {
        for (long i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const long i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = static_cast<int>(std::min<long>(threads, count));
    pool.reserve(n);
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace glmmasym

#endif
