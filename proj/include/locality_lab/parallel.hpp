#pragma once

#include <functional>

#include "locality_lab/types.hpp"

namespace locality_lab {

// Process-wide cap on worker threads (0 = hardware concurrency).
void set_thread_limit(Index threads);
Index thread_limit();

// Runs body(i) for i in [0, n). Each index writes only its own output slot,
// so results do not depend on the thread count.
void parallel_for(Index n, const std::function<void(Index)>& body);

}  // namespace locality_lab
