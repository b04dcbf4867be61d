#pragma once

#include <cstddef>
#include <functional>

namespace mslstm {

// Worker cap for data-parallel loops. Results never depend on it: every
// parallel loop writes to disjoint outputs and reductions run in index order.
void set_thread_count(std::size_t n);
std::size_t thread_count();

// Reads MSLSTM_THREADS if set; returns the resulting cap.
std::size_t init_threads_from_env();

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mslstm
