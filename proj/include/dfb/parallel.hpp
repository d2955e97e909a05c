#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

#include "dfb/types.hpp"

namespace dfb {

/// Runs fn(begin, end) over a static partition of [0, n).  Writes must go to
/// disjoint, preallocated slots; under that contract the result is identical
/// to the sequential run for any worker count.
void parallel_for(Index n, int threads, const std::function<void(Index, Index)>& fn);

int resolve_threads(int requested);

/// Fixed block size for cross-path reductions.  Partial sums are formed per
/// block and combined in block order, so the rounding of a reduction does not
/// depend on the number of workers.
inline constexpr Index kReductionBlock = 4096;

/// Deterministic blocked sum of fn(i) over [0, n).  T needs operator+= and a
/// zero-initialised accumulator supplied by the caller.
template <typename T, typename F>
T blocked_sum(Index n, int threads, T zero, F&& fn) {
  const Index nblocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<T> partial(static_cast<std::size_t>(std::max<Index>(nblocks, 1)), zero);
  parallel_for(nblocks, threads, [&](Index b0, Index b1) {
    for (Index b = b0; b < b1; ++b) {
      T acc = zero;
      const Index lo = b * kReductionBlock;
      const Index hi = std::min(n, lo + kReductionBlock);
      for (Index i = lo; i < hi; ++i) acc += fn(i);
      partial[static_cast<std::size_t>(b)] = std::move(acc);
    }
  });
  T total = zero;
  for (Index b = 0; b < nblocks; ++b) total += partial[static_cast<std::size_t>(b)];
  return total;
}

}  // namespace dfb
