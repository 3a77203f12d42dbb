#pragma once

#include <cstddef>
#include <functional>

namespace phaselattice {

/// Worker count: PHASELATTICE_THREADS if set and positive, else hardware concurrency.
int thread_count();

/// Calls body(i) for i in [0, n) on up to thread_count() threads. Exceptions are rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace phaselattice
