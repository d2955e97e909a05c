#pragma once

#include <functional>
#include <vector>

#include "dfb/segment.hpp"

namespace dfb {

/**
 * Feature map for the regression approximation of conditional expectations
 * on the segment state: an intercept, lagged values, the window mean, and
 * optionally all pairwise products of those base features.  Defaults give
 * p = 15 for a scalar state with lags {0, -r/2, -r}.
 */
struct RegressionBasis {
  std::vector<double> lags;
  bool include_window_mean = true;
  bool include_products = true;
  double ridge_factor = 1e-8;
  /// Problem-specific regressors appended verbatim (no products); pricing
  /// adds the claim payoff here so the near-expiry surface stays in span.
  std::vector<std::function<double(const Segment&)>> extra;

  static RegressionBasis make_default(const GridSpec& grid);

  Index base_size(const GridSpec& grid) const;
  Index size(const GridSpec& grid) const;

  /// Fills `out` (resized to size(grid)) with the features of x.
  void features(const Segment& x, Vec& out) const;
};

}  // namespace dfb
