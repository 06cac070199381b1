#include "core/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "core/errors.hpp"

namespace bcr {

int hardware_worker_count() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

void parallel_for(int count, int workers, const std::function<void(int)>& task) {
    if (count < 0) {
        throw InvalidArgument("task count must be non-negative");
    }
    if (workers < 1) {
        throw InvalidArgument("worker count must be positive");
    }
    if (!task) {
        throw InvalidArgument("task must be callable");
    }
    if (count == 0) {
        return;
    }
    if (workers == 1 || count == 1) {
        for (int i = 0; i < count; ++i) {
            task(i);
        }
        return;
    }

    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    const auto worker = [&]() {
        while (true) {
            const int i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) {
                return;
            }
            try {
                task(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        }
    };

    const int spawned = std::min(workers, count);
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(spawned));
    for (int i = 0; i < spawned; ++i) {
        threads.emplace_back(worker);
    }
    for (std::thread& t : threads) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

}  // namespace bcr
