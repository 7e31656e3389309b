#pragma once

#include <cstddef>
#include <functional>

namespace volcal {

/// Worker count: VOLCAL_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

/// Calls body(i) for i in [0, n). Iterations are split into contiguous blocks, one per
/// worker; each iteration must write only its own outputs so results are independent of
/// the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace volcal
