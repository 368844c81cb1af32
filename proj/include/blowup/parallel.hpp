#pragma once

// Minimal fork-join loop over an index range. Each index is handled by
// exactly one worker, so results written per index are deterministic.

#include <functional>

namespace blowup {

/// Caps the worker count (0 = hardware concurrency).
void set_max_threads(unsigned n);
unsigned max_threads();

void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace blowup
