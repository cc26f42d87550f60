#pragma once

#include <cstddef>
#include <functional>

namespace spikeseg {

// Worker count used by parallel_for. Resolution order: explicit
// set_thread_count(), then the SPIKESEG_THREADS environment variable,
// then hardware concurrency.
int thread_count();
void set_thread_count(int n);

// Runs fn(i) for i in [0, n). Work is split into contiguous index ranges,
// one per worker. Each index is processed exactly once, so results are
// identical for any worker count as long as fn writes only to state owned
// by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace spikeseg
