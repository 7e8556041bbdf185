#pragma once

#include <cstddef>
#include <functional>

namespace cklemap {

/// Worker count for column-parallel loops: CKLEMAP_THREADS when set to a
/// positive integer, otherwise the hardware concurrency.
int thread_limit();

/// Calls body(i) for i in [0, n) on up to thread_limit() threads. Each index
/// runs exactly once and iterations must not share mutable state, so the
/// result does not depend on the thread count. The first exception thrown by
/// any iteration is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cklemap
