#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace sce {

/// Runs body(i) for i in [0, n) across hardware threads. Each index is
/// executed exactly once; callers write into per-index slots and reduce in
/// index order afterwards, so results do not depend on the schedule.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    const std::size_t workers = std::min(hw, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace sce
