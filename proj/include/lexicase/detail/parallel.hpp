#ifndef LEXICASE_DETAIL_PARALLEL_HPP
#define LEXICASE_DETAIL_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lexicase::detail {

// Calls body(begin, end, worker) over contiguous chunks of [0, n) on up to
// `jobs` threads. The first exception thrown by any chunk is rethrown.
template <typename Body>
void parallel_chunks(std::size_t n, unsigned jobs, Body&& body)
{
    auto const workers = std::min<std::size_t>(std::max(jobs, 1U), n);
    if (workers <= 1) {
        if (n > 0) {
            body(std::size_t { 0 }, n, std::size_t { 0 });
        }
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto const chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        auto const begin = std::min(n, w * chunk);
        auto const end = std::min(n, begin + chunk);
        threads.emplace_back([&, begin, end, w] {
            try {
                body(begin, end, w);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

} // namespace lexicase::detail

#endif
