#pragma once

#include <cstddef>
#include <functional>

namespace driftscan {

/// Worker count used by parallel_for. 0 selects hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Calls fn(i) for every i in [begin, end), spreading contiguous chunks over
/// thread_count() workers. Calls made from inside a worker run serially.
/// The first exception thrown by any call is
/// rethrown after all workers finish.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& fn);

}  // namespace driftscan
