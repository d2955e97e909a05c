#include "dfb/parallel.hpp"

namespace dfb {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(Index n, int threads, const std::function<void(Index, Index)>& fn) {
  if (n <= 0) return;
  const int nw = std::min<Index>(resolve_threads(threads), n);
  if (nw <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nw));
  const Index chunk = (n + nw - 1) / nw;
  for (int w = 0; w < nw; ++w) {
    const Index lo = static_cast<Index>(w) * chunk;
    const Index hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace dfb
