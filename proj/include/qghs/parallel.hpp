/// Deterministic data-parallel loop helper.
///
/// Work items are split into static contiguous chunks; each item writes only
/// its own slots, and any reduction over items is done serially afterwards in
/// index order. Results are therefore bit-identical for every thread count.
#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace qghs {

inline int& thread_count() {
    static int n = 1;
    return n;
}

inline void set_thread_count(int n) { thread_count() = n < 1 ? 1 : n; }

template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const int nt = thread_count();
    if (nt <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(nt, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&, t]() {
            for (std::size_t i = t; i < n; i += workers) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace qghs
