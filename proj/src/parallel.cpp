#include "xvabsde/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace xvabsde {

namespace {

std::atomic<int> g_worker_override{0};

int env_workers() {
    const char* raw = std::getenv("XVA_BSDE_THREADS");
    if (!raw) return 0;
    const int parsed = std::atoi(raw);
    return parsed > 0 ? parsed : 0;
}

} // namespace

int max_workers() {
    const int forced = g_worker_override.load(std::memory_order_relaxed);
    if (forced > 0) return forced;
    const int from_env = env_workers();
    if (from_env > 0) return from_env;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void set_max_workers(int workers) {
    g_worker_override.store(workers > 0 ? workers : 0, std::memory_order_relaxed);
}

std::size_t chunk_count(std::size_t n) {
    if (n == 0) return 0;
    constexpr std::size_t min_chunk = 1024;
    constexpr std::size_t max_chunks = 128;
    const std::size_t by_size = (n + min_chunk - 1) / min_chunk;
    return std::clamp<std::size_t>(by_size, 1, max_chunks);
}

void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    const std::size_t chunks = chunk_count(n);
    if (chunks == 0) return;

    auto run_chunk = [&](std::size_t c) {
        const std::size_t begin = c * n / chunks;
        const std::size_t end = (c + 1) * n / chunks;
        fn(c, begin, end);
    };

    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(max_workers()), chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= chunks) return;
            try {
                run_chunk(c);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t i = 0; i + 1 < workers; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    if (first_error) std::rethrow_exception(first_error);
}

double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double acc = 0.0;
        for (double x : xs) acc += x;
        return acc;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

} // namespace xvabsde
