#include "spdet/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace spdet {

int thread_count() {
    if (const char* env = std::getenv("SPDET_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

namespace {

void run_workers(int workers, const std::function<void(int)>& body) {
    if (workers <= 1) {
        body(0);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                body(w);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& fn) {
    const int workers = static_cast<int>(std::min<std::size_t>(thread_count(), std::max<std::size_t>(n, 1)));
    run_workers(workers, [&](int w) {
        const std::size_t begin = n * w / workers, end = n * (w + 1) / workers;
        if (begin < end) fn(begin, end, w);
    });
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const int workers = static_cast<int>(std::min<std::size_t>(thread_count(), std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    run_workers(workers, [&](int) {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
}

}  // namespace spdet
