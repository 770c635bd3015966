#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace trapwave {

//! Worker count used by the parallel maps; initialised from TRAPWAVE_THREADS.
int thread_count();
void set_thread_count(int n);

/*!
 * Run body(begin, end) over [0, n) split into fixed chunks of `chunk`
 * indices. Chunk boundaries do not depend on the thread count.
 */
void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t)>& body);

/*!
 * Deterministic map-reduce: each fixed chunk produces a partial with
 * map(begin, end); partials are folded left to right with reduce.
 */
template <typename T, typename Map, typename Reduce>
T parallel_reduce(std::size_t n, std::size_t chunk, T init, Map map, Reduce reduce)
{
    if (n == 0) return init;
    chunk = std::max<std::size_t>(chunk, 1);
    const std::size_t nchunks = (n + chunk - 1) / chunk;
    std::vector<T> partial(nchunks, init);
    parallel_chunks(nchunks, 1, [&](std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c) {
            const std::size_t lo = c * chunk;
            partial[c] = map(lo, std::min(n, lo + chunk));
        }
    });
    T result = init;
    for (auto& p : partial) result = reduce(result, p);
    return result;
}

}  // namespace trapwave
