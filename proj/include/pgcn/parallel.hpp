#pragma once

#include <cstdint>
#include <functional>

namespace pgcn {

// Runs fn(i) for i in [0, n) on up to `jobs` worker threads.  Tasks are pulled
// off a shared atomic counter; callers must make tasks independent.  With
// jobs <= 1 this degrades to a plain loop.
void parallel_for(std::int64_t n, int jobs, const std::function<void(std::int64_t)>& fn);

// --jobs fallback: PGCN_THREADS environment variable, else 1.
int default_jobs();

}  // namespace pgcn
