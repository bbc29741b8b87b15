#pragma once
// Pair-level parallelism helper. Work is split into contiguous chunks, one
// per worker; callers reduce per-worker results in worker order so that a
// fixed worker count always yields the same floating-point reduction order.

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace carl {

/// Resolve the worker count: explicit request > CARL_WORKERS env > hardware.
inline int resolve_workers(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("CARL_WORKERS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Run fn(worker, begin, end) over [0,total) split into `workers` contiguous
/// chunks. Exceptions from workers are rethrown on the calling thread.
template <typename Fn>
void parallel_chunks(std::size_t total, int workers, Fn&& fn) {
    workers = std::max(1, workers);
    if (total == 0) return;
    std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), total);
    if (w == 1) {
        fn(0, std::size_t{0}, total);
        return;
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(w);
    std::size_t base = total / w, rem = total % w;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < w; ++i) {
        std::size_t len = base + (i < rem ? 1 : 0);
        std::size_t end = begin + len;
        threads.emplace_back([&, i, begin, end] {
            try {
                fn(i, begin, end);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
        begin = end;
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Chunk boundaries used by parallel_chunks, for callers that need to know
/// which worker owned which range during the ordered reduction.
inline std::vector<std::pair<std::size_t, std::size_t>> chunk_ranges(std::size_t total, int workers) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t w = std::min<std::size_t>(std::max(1, workers), std::max<std::size_t>(total, 1));
    std::size_t base = total / w, rem = total % w, begin = 0;
    for (std::size_t i = 0; i < w; ++i) {
        std::size_t end = begin + base + (i < rem ? 1 : 0);
        out.emplace_back(begin, end);
        begin = end;
    }
    return out;
}

}  // namespace carl
