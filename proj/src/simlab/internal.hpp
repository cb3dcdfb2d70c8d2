#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace seqab::sim::detail {

inline unsigned resolve_threads(unsigned requested, std::uint64_t jobs) {
    unsigned t = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
    if (jobs < t) t = static_cast<unsigned>(std::max<std::uint64_t>(1, jobs));
    return t;
}

// Runs fn(i) for i in [0, count).  Each index writes only its own slot, so
// results do not depend on scheduling.
template <class Fn>
void parallel_for(std::uint64_t count, unsigned threads, Fn&& fn) {
    const unsigned workers = resolve_threads(threads, count);
    if (workers <= 1) {
        for (std::uint64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (;;) {
            const std::uint64_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

// Smallest order statistic covering fraction q; UINT64_MAX marks a
// censored (never stopped) run.
inline std::uint64_t order_quantile(std::vector<std::uint64_t> values, double q) {
    if (values.empty()) return UINT64_MAX;
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size());
    std::size_t idx = static_cast<std::size_t>(pos);
    if (static_cast<double>(idx) == pos && idx > 0) --idx;
    idx = std::min(idx, values.size() - 1);
    return values[idx];
}

}  // namespace seqab::sim::detail
