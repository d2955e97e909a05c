#pragma once

#include "dfb/sdde.hpp"

namespace dfb {

/**
 * Pathwise derivative of the state with respect to the noise at a base time.
 *
 * deriv[path][j] is an n x (m + num_steps + 1) matrix aligned with the
 * ensemble history axis; column m + k holds the sensitivity of y at time
 * index k to the j-th noise component at the base step.  Entries before the
 * base step are structural zeros; the value at the base step is the j-th
 * column of sigma there.
 */
struct MalliavinState {
  Index base_step = 0;
  double base_time = 0.0;
  std::vector<std::vector<Mat>> deriv;
};

/// Euler propagation of the linear variational delay equation, driven by the
/// same increments as the carrying ensemble.  Needs the model's gradients.
MalliavinState propagate_derivative(const CoefficientModel& model, const PathEnsemble& ens,
                                    Index base_step, int threads = 1);

/// <gradient of f at X_t, derivative window at t> per path and noise column.
/// Returns num_paths x d.
Mat chain_rule(const SegmentFunctional& f, const MalliavinState& state, const PathEnsemble& ens,
               Index t_step, int threads = 1);

/// Central-difference re-simulation oracle: bumps the increment at the base
/// step by +/- eps in each noise direction on common noise and differences
/// f(X_t).  Returns num_paths x d.
Mat bump_oracle(const CoefficientModel& model, double t, const Segment& x, const NoiseGrid& noise,
                Index base_step, double eps, Index t_step, const SegmentFunctional& f,
                int threads = 1);

void write_malliavin_csv(const MalliavinState& state, const PathEnsemble& ens,
                         const std::string& path);

}  // namespace dfb
