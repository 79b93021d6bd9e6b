#pragma once

#include <cstddef>
#include <functional>

namespace bevmod {

// Runs fn(0..n-1) on up to `jobs` threads (jobs <= 1 runs inline). If any
// call throws, the exception from the lowest index is rethrown after all
// workers finish, so failures are reported deterministically.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace bevmod
