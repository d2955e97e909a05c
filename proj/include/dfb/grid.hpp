#pragma once

#include "dfb/errors.hpp"
#include "dfb/types.hpp"

namespace dfb {

/**
 * Uniform grid on the look-back window [-r, 0].
 *
 * The step is derived from (r, m) and the stored delay is canonicalised to
 * m * h, so the coupling m * h == r holds exactly in floating point.  The
 * same step doubles as the simulation step, which keeps the window shift
 * free of interpolation.
 */
struct GridSpec {
  double delay_r = 0.0;
  double step_h = 0.0;
  int past_points_m = 0;
  int dim_n = 1;
  int dim_d = 1;

  static GridSpec make(double requested_r, int m, int n, int d);

  /// theta_j = -r + j*h for j = 0..m; theta_m == 0 exactly.
  double theta(int j) const { return step_h * static_cast<double>(j - past_points_m); }

  bool same_window(const GridSpec& o) const {
    return past_points_m == o.past_points_m && step_h == o.step_h && dim_n == o.dim_n;
  }
};

}  // namespace dfb
