#pragma once

#include <cstddef>
#include <functional>

namespace krasovskii {

/// Worker cap: KRASOVSKII_THREADS if set to a positive integer, otherwise the
/// machine's hardware concurrency (at least 1).
[[nodiscard]] std::size_t worker_count();

/// Runs body(i) for i in [0, count). Each index runs exactly once; results must
/// be written to per-index slots so the outcome does not depend on scheduling.
/// Nested calls from inside a worker run sequentially.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace krasovskii
