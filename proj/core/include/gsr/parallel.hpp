#pragma once

#include <cstddef>
#include <functional>

namespace gsr {

/// Resolves a requested worker count; 0 means hardware concurrency.
unsigned resolve_threads(unsigned requested);

/// Calls body(i) for i in [0, count) on up to `threads` workers.
///
/// Indices are split into contiguous chunks. The body must only write to
/// per-index storage; callers reduce afterwards in index order, which keeps
/// results independent of the worker count. The first exception thrown by any
/// worker is rethrown on the calling thread.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace gsr
