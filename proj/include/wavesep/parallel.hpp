#ifndef WAVESEP_PARALLEL_HPP
#define WAVESEP_PARALLEL_HPP

#include <algorithm>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace wavesep {

inline int default_thread_count() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

// Runs fn(i) for i in [0, count). Work items must write to disjoint data;
// results are then identical for any thread count. The first exception is
// rethrown on the caller's thread.
inline void parallel_for(size_t count, int threads, const std::function<void(size_t)>& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || count <= 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const size_t workers = std::min<size_t>(threads, count);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (size_t i = w; i < count; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace wavesep

#endif
