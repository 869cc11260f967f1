#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string_view>
#include <thread>
#include <vector>

namespace rkhs_sparse {

/// Worker cap from RKHS_SPARSE_THREADS; falls back to the hardware count.
inline std::size_t worker_count() {
    std::size_t hw = std::max(1U, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("RKHS_SPARSE_THREADS")) {
        std::string_view sv(env);
        std::size_t cap = 0;
        auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), cap);
        if (ec == std::errc() && ptr == sv.data() + sv.size() && cap > 0) {
            return cap;
        }
    }
    return hw;
}

/// Runs fn(i) for i in [0, count). Each job must write only to its own
/// output slot; the first exception thrown by any job is rethrown after
/// all workers join (lowest job index wins, so the error is deterministic).
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, std::size_t workers = worker_count()) {
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::size_t first_error_index = count;

    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(err_mutex);
                if (i < first_error_index) {
                    first_error_index = i;
                    first_error = std::current_exception();
                }
            }
        }
    };

    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        pool.emplace_back(worker);
    }
    worker();
    pool.clear();

    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

}  // namespace rkhs_sparse
