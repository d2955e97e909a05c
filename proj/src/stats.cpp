#include "dfb/stats.hpp"

#include "dfb/rng.hpp"

namespace dfb {

MeanSe mean_se(const Vec& sample, int threads) {
  MeanSe out;
  out.n = sample.size();
  if (out.n == 0) return out;
  const double sum = blocked_sum<double>(out.n, threads, 0.0,
                                         [&](Index i) { return sample[i]; });
  out.mean = sum / static_cast<double>(out.n);
  if (out.n < 2) return out;
  const double ss = blocked_sum<double>(out.n, threads, 0.0, [&](Index i) {
    const double d = sample[i] - out.mean;
    return d * d;
  });
  const double var = ss / static_cast<double>(out.n - 1);
  out.std_error = std::sqrt(var / static_cast<double>(out.n));
  return out;
}

VarSe variance_se(const Vec& sample, int threads) {
  VarSe out;
  const Index n = sample.size();
  if (n < 2) return out;
  const MeanSe m = mean_se(sample, threads);
  const double ss = blocked_sum<double>(n, threads, 0.0, [&](Index i) {
    const double d = sample[i] - m.mean;
    return d * d;
  });
  out.variance = ss / static_cast<double>(n - 1);
  out.std_error = out.variance * std::sqrt(2.0 / static_cast<double>(n - 1));
  return out;
}

double bootstrap_se(const Vec& sample, std::uint64_t seed, int rounds,
                    const std::function<double(const Vec&)>& statistic) {
  const Index n = sample.size();
  if (n < 2 || rounds < 2) return 0.0;
  Vec stats(rounds);
  Vec resampled(n);
  for (int r = 0; r < rounds; ++r) {
    for (Index i = 0; i < n; ++i) {
      // Two uniforms per Philox block; only the first is used for the index.
      const auto key = std::array<std::uint32_t, 2>{static_cast<std::uint32_t>(seed),
                                                    static_cast<std::uint32_t>(seed >> 32)};
      const auto out = philox4x32({static_cast<std::uint32_t>(r),
                                   static_cast<std::uint32_t>(i),
                                   static_cast<std::uint32_t>(i >> 32), 0x626f6f74u},
                                  key);
      const std::uint64_t bits = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
      resampled[i] = sample[static_cast<Index>(bits % static_cast<std::uint64_t>(n))];
    }
    stats[r] = statistic(resampled);
  }
  const MeanSe m = mean_se(stats);
  return m.std_error * std::sqrt(static_cast<double>(rounds));
}

}  // namespace dfb
