#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace mff::par {

namespace detail {
inline int& thread_count_ref() {
    static int count = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return count;
}
// Set while executing inside a parallel region (or an experiment worker) so
// nested loops stay sequential instead of oversubscribing.
inline bool& nested_flag() {
    thread_local bool nested = false;
    return nested;
}
}  // namespace detail

inline int thread_count() { return detail::thread_count_ref(); }
inline void set_thread_count(int n) { detail::thread_count_ref() = std::max(1, n); }

/// RAII guard marking the current thread as a worker; loops below run
/// sequentially underneath it.
class NestedScope {
public:
    NestedScope() : prev_(detail::nested_flag()) { detail::nested_flag() = true; }
    ~NestedScope() { detail::nested_flag() = prev_; }
    NestedScope(const NestedScope&) = delete;
    NestedScope& operator=(const NestedScope&) = delete;

private:
    bool prev_;
};

/// Runs body(i) for i in [0, n). Each index writes only to its own slots, so
/// results are independent of the thread count.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    const int threads = detail::nested_flag() ? 1 : thread_count();
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = n * w / workers;
        const std::size_t end = n * (w + 1) / workers;
        pool.emplace_back([begin, end, &body] {
            NestedScope scope;
            for (std::size_t i = begin; i < end; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

/// Deterministic parallel sum: terms are grouped into fixed-size blocks,
/// blocks are summed sequentially inside, and block partials are reduced in
/// index order. Bit-identical for any thread count.
template <class Term>
double block_sum(std::size_t n, Term&& term, std::size_t block = 2048) {
    if (n == 0) return 0.0;
    const std::size_t n_blocks = (n + block - 1) / block;
    std::vector<double> partial(n_blocks, 0.0);
    parallel_for(n_blocks, [&](std::size_t b) {
        const std::size_t begin = b * block;
        const std::size_t end = std::min(n, begin + block);
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i) s += term(i);
        partial[b] = s;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace mff::par
