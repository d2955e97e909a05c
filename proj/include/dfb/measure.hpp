#pragma once

#include <utility>
#include <vector>

#include "dfb/segment.hpp"

namespace dfb {

/**
 * A finite R^k-valued measure on [-r, 0], the carrier for gradients of
 * functionals on the segment space.
 *
 * Decomposition: an atom at 0 (stored apart because downstream formulas
 * consume exactly that mass), point atoms strictly inside [-r, 0), and an
 * absolutely continuous part represented by quadrature weights w_j so that
 * its pairing is sum_j h * w_j . f(theta_j).  A weight vector of ones with
 * halved endpoints is the trapezoidal representation of Lebesgue measure.
 */
struct WindowMeasure {
  GridSpec grid;
  Vec atom_at_zero;                                  // k
  std::vector<std::pair<double, Vec>> interior_atoms;  // (theta in [-r, 0), mass in R^k)
  Mat density_weights;                               // k x (m+1)

  Index dim() const { return atom_at_zero.size(); }
};

WindowMeasure zero_measure(const GridSpec& grid, Index dim);

/// Point mass `mass` at `theta`; the theta == 0 case lands in atom_at_zero.
WindowMeasure dirac_measure(const GridSpec& grid, double theta, const Vec& mass);

/// Scalar Lebesgue measure on [-r, 0] (trapezoidal weights), total mass r.
WindowMeasure lebesgue_measure(const GridSpec& grid);

/// <mu, f> with f given at grid nodes (k x (m+1)); off-grid atoms interpolate.
double pair_with(const WindowMeasure& mu, const Mat& f_nodes);
double pair_with(const WindowMeasure& mu, const Segment& f);

/// |atom0|_1 + sum |atoms|_1 + sum_j h * |w_j|_1; recomputable from fields.
double total_variation(const WindowMeasure& mu);

WindowMeasure scaled(const WindowMeasure& mu, double factor);
WindowMeasure& accumulate(WindowMeasure& target, const WindowMeasure& add, double factor = 1.0);

}  // namespace dfb
