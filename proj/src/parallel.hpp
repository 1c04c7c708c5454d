#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pestdet::detail {

inline unsigned resolve_threads(unsigned requested) {
    if (requested)
        return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Splits [0, n) into contiguous chunks, one per thread; fn(begin, end, chunk).
template <typename Fn>
void parallel_chunks(size_t n, unsigned threads, Fn&& fn) {
    const size_t t = std::min<size_t>(std::max<size_t>(1, resolve_threads(threads)), std::max<size_t>(1, n));
    if (t <= 1) {
        fn(size_t{0}, n, size_t{0});
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex mu;
    for (size_t k = 0; k < t; ++k) {
        const size_t b = n * k / t, e = n * (k + 1) / t;
        pool.emplace_back([&, b, e, k] {
            try {
                fn(b, e, k);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!err)
                    err = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (err)
        std::rethrow_exception(err);
}

inline size_t chunk_count(size_t n, unsigned threads) {
    return std::min<size_t>(std::max<size_t>(1, resolve_threads(threads)), std::max<size_t>(1, n));
}

} // namespace pestdet::detail
