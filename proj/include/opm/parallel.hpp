#ifndef OPM_PARALLEL_HPP
#define OPM_PARALLEL_HPP

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace opm {

// Runs fn(i) for i in [0, n) across up to `jobs` threads (0 = hardware
// concurrency). Work items must be independent; the first exception wins
// and is rethrown on the caller's thread.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
    if (n == 0) return;
    unsigned workers = jobs == 0 ? std::thread::hardware_concurrency() : jobs;
    if (workers == 0) workers = 1;
    if (workers > n) workers = static_cast<unsigned>(n);

    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load() && error) std::rethrow_exception(error);
}

} // namespace opm

#endif
