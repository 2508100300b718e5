#pragma once

#include <atomic>
#include <exception>
#include <algorithm>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace dqpe::harness {

/// Runs task(i) for i in [0, n) on `workers` threads; idle threads take the next unclaimed index.
/// The first exception thrown by any task is rethrown after all threads join.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task) {
    if (n == 0) return;
    const std::size_t width = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                task(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
            }
        }
    };
    if (width == 1) {
        worker();
    } else {
        std::vector<std::jthread> threads;
        for (std::size_t t = 0; t < width; ++t) threads.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace dqpe::harness
