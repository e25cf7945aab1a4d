#pragma once

#include <thread>
#include <vector>

namespace recon4d {

/// Run fn(begin, end, chunk_index) over [0, n) split into `threads`
/// contiguous chunks. Chunk boundaries depend only on (n, threads), so any
/// chunk-indexed accumulation merged in chunk order is reproducible for a
/// fixed thread count. threads <= 1 runs inline.
template <typename Fn>
void parallel_chunks(std::size_t n, int threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        fn(std::size_t{0}, n, 0);
        return;
    }
    const std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(t);
    const std::size_t base = n / t, rem = n % t;
    std::size_t begin = 0;
    for (std::size_t c = 0; c < t; ++c) {
        const std::size_t len = base + (c < rem ? 1 : 0);
        pool.emplace_back([&fn, begin, len, c] { fn(begin, begin + len, static_cast<int>(c)); });
        begin += len;
    }
    for (auto& th : pool) th.join();
}

}  // namespace recon4d
