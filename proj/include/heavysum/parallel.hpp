#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace heavysum {

/// Worker count from HEAVYSUM_WORKERS when set, else `fallback`.
inline int resolve_workers(int fallback = 1) {
    if (const char* env = std::getenv("HEAVYSUM_WORKERS")) {
        try {
            const int w = std::stoi(env);
            if (w >= 1) {
                return w;
            }
        } catch (const std::exception&) {
        }
    }
    return std::max(1, fallback);
}

/// Run body(i) for i in [0, count) on `workers` threads. Each index is
/// processed exactly once; callers write into per-index slots and reduce in
/// index order, so results never depend on the worker count.
template <typename Body>
void parallel_for(std::int64_t count, int workers, Body&& body) {
    workers = static_cast<int>(std::clamp<std::int64_t>(workers, 1, std::max<std::int64_t>(count, 1)));
    if (workers == 1) {
        for (std::int64_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::int64_t i = w; i < count; i += workers) {
                    body(i);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

/// Index-ordered map: out[i] = f(i).
template <typename T, typename F>
std::vector<T> parallel_map(std::int64_t count, int workers, F&& f) {
    std::vector<T> out(static_cast<std::size_t>(count));
    parallel_for(count, workers, [&](std::int64_t i) { out[static_cast<std::size_t>(i)] = f(i); });
    return out;
}

} // namespace heavysum
