#pragma once

#include <cstddef>
#include <functional>

namespace regenn {

/// Sets the number of worker threads used by parallel_for. 0 or 1 disables
/// parallel execution. Thread count never changes results: work is split by
/// index range and every reduction runs in a fixed serial order inside its
/// range.
void set_max_threads(std::size_t n);
std::size_t max_threads();

/// Runs fn(begin, end) over disjoint chunks of [0, n). Serial when n is small
/// or threading is disabled.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace regenn
