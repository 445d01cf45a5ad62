#pragma once

#include <functional>

namespace htsysid {

/// Worker count: HTSYSID_WORKERS when set (must be a positive integer),
/// otherwise std::thread::hardware_concurrency(), floor 1.
int worker_count();

/// Runs fn(0..count-1) across worker threads (atomic work stealing). Every
/// index is attempted; if any invocations throw, the exception from the
/// lowest index is rethrown after all workers finish, so failure behavior is
/// deterministic and independent of thread scheduling.
void parallel_for(int count, const std::function<void(int)>& fn);

}  // namespace htsysid
