#pragma once

#include "dfb/bsde.hpp"

namespace dfb {

struct MildResidualConfig {
  SolverConfig solver;
  /// Quadrature over the time integral uses every `quad_stride`-th grid time.
  int quad_stride = 5;
  /// Re-estimate the inner expectations by fresh simulation at reduced size
  /// instead of reusing the outer ensemble (audit mode).
  bool nested_audit = false;
  Index audit_paths = 1000;
};

struct MildResidualReport {
  double value = 0.0;      // v(t, x)
  double rhs = 0.0;        // semigroup terminal term minus the driver integral
  double residual = 0.0;   // rhs - value
  double std_error = 0.0;
};

/**
 * Variation-of-constants consistency check: estimates
 *   E terminal(X_T) - integral over [t, T] of E psi(tau, X_tau, v, z) d tau
 * on an ensemble from (t, x), with v and z read from the regression
 * surrogates of the backward solve, and compares against v(t, x).
 */
MildResidualReport mild_residual(const CoefficientModel& model, const Driver& driver,
                                 const SegmentFunctional& terminal, double t, const Segment& x,
                                 const MildResidualConfig& config);

void write_residual_json(const MildResidualReport& report, const MildResidualConfig& config,
                         const std::string& path);

}  // namespace dfb
