#pragma once

#include <cstddef>
#include <functional>

namespace rwk {

// Runs body(i) for every i in [0, count) on up to `workers` threads. Work is
// handed out dynamically; the first exception thrown by any task is rethrown
// after all threads have joined.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

}  // namespace rwk
