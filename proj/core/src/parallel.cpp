#include <farmselect/parallel.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace farmselect {

Index default_thread_count()
{
    if (const char* env = std::getenv("FARMSELECT_THREADS")) {
        try {
            const long value = std::stol(env);
            if (value > 0) return static_cast<Index>(value);
        } catch (const std::exception&) {
        }
    }
    return std::max<Index>(1, static_cast<Index>(std::thread::hardware_concurrency()));
}

void parallel_for(Index count, Index threads, const std::function<void(Index)>& body)
{
    if (count <= 0) return;
    const Index workers = std::min(count, threads > 0 ? threads : default_thread_count());
    if (workers <= 1) {
        for (Index i = 0; i < count; ++i) body(i);
        return;
    }

    std::atomic<Index> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto work = [&] {
        for (Index i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (Index w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace farmselect
