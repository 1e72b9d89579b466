#pragma once

#include <cstddef>
#include <functional>

namespace annulus {

/// Worker count for internal loops: hardware concurrency, capped by the
/// ANNULUS_INTERP_THREADS environment variable when it is set.
unsigned worker_count();

/// Runs body(i) for i in [0, count). Each index is visited exactly once; the
/// caller must make iterations independent (distinct output slots).
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace annulus
