#pragma once

#include <cstddef>
#include <functional>

namespace swcs {

// Process-wide worker count used by apply_h and pool_gradient. Defaults to 1.
void set_num_threads(int n);
int num_threads();

// Splits [0, n) into `chunks` contiguous ranges and runs fn(chunk, begin, end) on
// up to `workers` threads (0: num_threads()). Chunk boundaries depend only on n and chunks.
void parallel_chunks(std::size_t n, int chunks,
                     const std::function<void(int, std::size_t, std::size_t)>& fn, int workers = 0);

}  // namespace swcs
