#pragma once

#include <cstddef>
#include <functional>

namespace v2vdep {

// Process-wide worker cap for parallel_for. 0 selects the hardware
// concurrency. Outputs must not depend on this value: parallel loops write
// into index-addressed slots and reductions run in index order.
void set_max_threads(unsigned n);
unsigned max_threads();

// Static block partition of [0, n) across worker threads; fn is invoked as
// fn(begin, end) once per block. Falls back to a plain loop when a single
// worker suffices.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace v2vdep
