#pragma once

#include "dfb/grid.hpp"
#include "dfb/types.hpp"

namespace dfb {

/**
 * A sampled element of C([-r,0]; R^n): the sliding-window state of a delay
 * system.  Column j of `values` holds the R^n point at theta_j = -r + j*h;
 * column m is the current value.  Immutable by convention after construction.
 */
struct Segment {
  GridSpec grid;
  Mat values;  // n x (m+1)

  Vec current() const { return values.col(grid.past_points_m); }
};

Segment make_segment(const GridSpec& grid, Mat values);
Segment constant_segment(const GridSpec& grid, const Vec& value);
Segment constant_segment(const GridSpec& grid, double value);

/// Kink-free evaluation: exact at grid nodes, linear in between.
/// Throws std::domain_error outside [-r, 0].
Vec evaluate(const Segment& x, double theta);

/// One-step window shift: drops the oldest point, appends `new_value` at 0.
Segment roll(const Segment& x, const Vec& new_value);

/// max over grid nodes of the R^n max-norm.
double sup_norm(const Segment& x);

}  // namespace dfb
