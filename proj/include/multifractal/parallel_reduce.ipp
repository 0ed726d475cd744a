#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace multifractal {

template <typename T, typename MapFn, typename CombineFn>
T parallel_reduce(std::size_t count, T identity, MapFn map, CombineFn combine) {
    if (count == 0) return identity;
    std::vector<T> partial(count, identity);
    const unsigned threads =
        static_cast<unsigned>(std::min<std::size_t>(worker_threads(), count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) partial[i] = map(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                try {
                    for (std::size_t i = next++; i < count; i = next++) partial[i] = map(i);
                } catch (...) {
                    // first failure wins; stop handing out work
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = count;
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }
    // pairwise tree reduction in chunk order
    for (std::size_t stride = 1; stride < count; stride *= 2) {
        for (std::size_t i = 0; i + stride < count; i += 2 * stride) {
            partial[i] = combine(partial[i], partial[i + stride]);
        }
    }
    return partial[0];
}

}  // namespace multifractal
