#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace xvabsde {

/// Number of worker threads used by parallel loops. Resolution order:
/// set_max_workers() override, then the XVA_BSDE_THREADS environment
/// variable, then std::thread::hardware_concurrency().
int max_workers();

/// Overrides the worker count for this process (0 restores the default).
void set_max_workers(int workers);

/// Number of work chunks used for n items. Depends only on n, never on the
/// worker count, so chunked reductions are reproducible.
std::size_t chunk_count(std::size_t n);

/// Runs fn(chunk, begin, end) over [0, n) split into chunk_count(n) ranges.
/// Chunks are claimed by worker threads in arbitrary order; callers must
/// write results into per-chunk slots and reduce them in index order.
void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t chunk, std::size_t begin,
                                              std::size_t end)>& fn);

/// Pairwise summation; deterministic regardless of the worker count used
/// to fill the inputs.
double pairwise_sum(std::span<const double> xs);

} // namespace xvabsde
