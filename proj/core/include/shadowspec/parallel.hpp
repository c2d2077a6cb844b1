#pragma once

#include <cstddef>
#include <functional>

namespace shadowspec {

/// Worker count: hardware concurrency, capped by SHADOWSPEC_THREADS when set.
unsigned worker_count();

/// Runs body(i) for i in [0, count). Iterations must be independent; the
/// caller owns any reduction and performs it in index order.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace shadowspec
