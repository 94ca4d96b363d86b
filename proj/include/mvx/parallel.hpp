// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mvx {

/// Calls body(begin, end) on `threads` contiguous chunks of [0, n). Chunks
/// write disjoint outputs, so results never depend on the thread count. The
/// first exception thrown by any chunk is rethrown.
template <class Body>
void parallel_for(size_t n, unsigned threads, Body&& body) {
    threads = std::max(1u, std::min<unsigned>(threads, unsigned(std::min<size_t>(n, 1024))));
    if (threads <= 1) {
        if (n > 0) body(size_t(0), n);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        const size_t begin = n * t / threads, end = n * (t + 1) / threads;
        pool.emplace_back([&, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace mvx
