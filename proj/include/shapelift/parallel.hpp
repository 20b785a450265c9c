/*
 * shapelift - 3D shape and viewpoint estimation from 2D landmarks in modern C++.
 *
 * File: include/shapelift/parallel.hpp
 *
 * Copyright 2026 The shapelift authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef SHAPELIFT_PARALLEL_HPP
#define SHAPELIFT_PARALLEL_HPP

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace shapelift {

/// Worker cap: SHAPELIFT_THREADS if set (>= 1), otherwise the hardware concurrency.
inline int max_threads()
{
    if (const char* env = std::getenv("SHAPELIFT_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/**
 * Runs fn(i) for i in [0, n). Work items must be independent and write
 * only to their own index, which keeps results identical to the serial
 * order regardless of the thread count. The first exception thrown by
 * any item is rethrown after all workers finish.
 */
template <typename Fn>
inline void parallel_for(long n, Fn&& fn)
{
    const int threads = std::min<long>(max_threads(), n);
    if (threads <= 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<long> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const long i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& worker : pool) worker.join();
    if (error) std::rethrow_exception(error);
}

} // namespace shapelift

#endif /* SHAPELIFT_PARALLEL_HPP */
