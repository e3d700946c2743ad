#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace qdetect {

// Worker count used by library routines; 0 or 1 means serial.
void set_threads(int n);
int threads();

// Calls fn(i) for i in [0, n). Indices are split into contiguous blocks, one
// per worker. Callers write into per-index slots and reduce afterwards in
// index order, so results never depend on the worker count.
template <class Fn>
void parallel_for(size_t n, Fn&& fn) {
    const size_t workers = std::min<size_t>(threads() > 1 ? size_t(threads()) : 1, n);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr err;
    std::mutex m;
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) {
        size_t lo = n * w / workers, hi = n * (w + 1) / workers;
        pool.emplace_back([&, lo, hi] {
            try {
                for (size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> g(m);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace qdetect
