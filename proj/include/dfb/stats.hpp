#pragma once

#include <cmath>
#include <cstdint>

#include "dfb/parallel.hpp"
#include "dfb/types.hpp"

namespace dfb {

struct MeanSe {
  double mean = 0.0;
  double std_error = 0.0;
  Index n = 0;
};

/// Sample mean and standard error, accumulated with the fixed-block reduction.
MeanSe mean_se(const Vec& sample, int threads = 1);

/// Unbiased sample variance and the standard error of that variance estimate,
/// se(s^2) ~= s^2 * sqrt(2/(n-1)) under approximate normality.
struct VarSe {
  double variance = 0.0;
  double std_error = 0.0;
};
VarSe variance_se(const Vec& sample, int threads = 1);

/// Bootstrap standard error of a statistic of one sample.  Resampling indices
/// come from a counter-based stream keyed by (seed, round, draw), so the
/// result does not depend on the worker count.
double bootstrap_se(const Vec& sample, std::uint64_t seed, int rounds,
                    const std::function<double(const Vec&)>& statistic);

inline double combined_se(double a, double b) { return std::sqrt(a * a + b * b); }

}  // namespace dfb
