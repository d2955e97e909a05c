#include "dfb/basis.hpp"

namespace dfb {

RegressionBasis RegressionBasis::make_default(const GridSpec& grid) {
  RegressionBasis b;
  b.lags = {0.0, -0.5 * grid.delay_r, -grid.delay_r};
  return b;
}

Index RegressionBasis::base_size(const GridSpec& grid) const {
  return grid.dim_n *
         (static_cast<Index>(lags.size()) + (include_window_mean ? 1 : 0));
}

Index RegressionBasis::size(const GridSpec& grid) const {
  const Index q = base_size(grid);
  return 1 + q + (include_products ? q * (q + 1) / 2 : 0) +
         static_cast<Index>(extra.size());
}

void RegressionBasis::features(const Segment& x, Vec& out) const {
  const GridSpec& g = x.grid;
  const Index n = g.dim_n;
  const Index q = base_size(g);
  out.resize(size(g));
  out[0] = 1.0;
  Index pos = 1;
  for (double lag : lags) {
    out.segment(pos, n) = evaluate(x, lag);
    pos += n;
  }
  if (include_window_mean) {
    Vec mean = 0.5 * (x.values.col(0) + x.values.col(g.past_points_m));
    for (Index j = 1; j < g.past_points_m; ++j) mean += x.values.col(j);
    out.segment(pos, n) = mean * (g.step_h / g.delay_r);
    pos += n;
  }
  if (include_products) {
    for (Index a = 0; a < q; ++a)
      for (Index b = a; b < q; ++b) out[pos++] = out[1 + a] * out[1 + b];
  }
  for (const auto& fn : extra) out[pos++] = fn(x);
}

}  // namespace dfb
