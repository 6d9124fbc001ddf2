#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace nbsde
{
//! Run body(i) for i in [0, n) on a pool of threads; the first exception is rethrown.
template<class F>
void parallel_for(std::size_t n, F&& body)
{
    std::size_t const hw = std::max(1u, std::thread::hardware_concurrency());
    std::size_t const n_threads = std::min(hw, n);
    if (n_threads <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_threads; ++w)
    {
        pool.emplace_back([&, w] {
            try
            {
                for (std::size_t i = w; i < n; i += n_threads)
                    body(i);
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

}  // namespace nbsde
