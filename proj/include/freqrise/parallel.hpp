#pragma once

#include <cstddef>
#include <functional>

namespace freqrise {

// Worker count: FREQRISE_THREADS when set (>= 1), else hardware concurrency.
std::size_t default_thread_count();

// Runs body(i) for i in [0, n) on up to `threads` workers (0 = default).
// Blocks until done; the first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace freqrise
