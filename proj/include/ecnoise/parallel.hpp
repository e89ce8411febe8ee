// parallel.hpp -- index-parallel loop over [0, n).
#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ecnoise {

/// Worker cap shared by every module; 1 runs inline.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Calls body(i) for every i in [0, n) using up to thread_count() workers in
/// contiguous chunks. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace ecnoise
