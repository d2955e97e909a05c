#pragma once

#include <cstdint>

#include "dfb/basis.hpp"
#include "dfb/sdde.hpp"

namespace dfb {

/// Generator of the backward equation dY = psi(t, X, Y, Z) dt + Z dW.
struct Driver {
  std::function<double(double, const Segment&, double, const Vec&)> psi;
  double lipschitz_y = 0.0;
  double lipschitz_z = 0.0;
  double growth_K = 1.0;
  int growth_m = 0;
};

Driver zero_driver();
/// psi = rho * y: plain discounting.
Driver discount_driver(double rho);

struct SolverConfig {
  std::uint64_t seed = 1;
  Index num_paths = 10000;
  double horizon_T = 1.0;
  int threads = 1;
  /// Extra fixed-point sweeps of y = yhat - psi(t, x, y, z) dt; 0 = explicit.
  int implicit_iterations = 0;
  int bootstrap_rounds = 200;
};

/**
 * Regression Monte Carlo solution of the backward equation.
 *
 * Per time index k the solution keeps the regression coefficients of the
 * conditional mean of Y_{k+1} and of each component of Z_k on the features
 * of X_k, plus the per-path values.  At k = 0 the state is deterministic and
 * the coefficient vectors carry the plain Monte Carlo averages in the
 * intercept slot, so surrogate evaluation is uniform in k.
 */
struct BsdeSolution {
  GridSpec grid;
  double t0 = 0.0;
  double dt = 0.0;
  Index num_steps = 0;
  Index num_paths = 0;
  RegressionBasis basis;
  Mat y_coeff;               // p x num_steps; col k predicts E[Y_{k+1} | X_k]
  std::vector<Mat> z_coeff;  // num_steps entries, p x d
  Mat y_paths;               // num_paths x (num_steps + 1)
  std::vector<Mat> z_paths;  // num_steps entries, num_paths x d
  Vec r2_y;                  // per-step regression R^2 for the Y target
  double value_at_start = 0.0;
  double value_std_error = 0.0;

  double time(Index k) const { return t0 + dt * static_cast<double>(k); }
  /// Regression conditional mean E[Y_{k+1} | X_k = x].
  double y_surrogate(Index k, const Segment& x) const;
  /// Regression evaluation of Z at (t_k, x).
  Vec z_surrogate(Index k, const Segment& x) const;
};

/// Backward induction over a simulated ensemble:
///   Z_k = regress(Y_{k+1} dW_k / dt | features of X_k),
///   Y_k = regress(Y_{k+1} | features of X_k) - psi(t_k, X_k, Yhat_k, Z_k) dt,
/// with the terminal condition applied exactly on every path.
BsdeSolution solve_backward(const PathEnsemble& ens, const Driver& driver,
                            const SegmentFunctional& terminal, const RegressionBasis& basis,
                            const SolverConfig& config);

/// v(t_k, x) from the regression surrogates: the conditional-mean evaluation
/// followed by the same driver step the backward pass applies per path.
double value_surrogate(const BsdeSolution& solution, const Driver& driver, Index k,
                       const Segment& x, int implicit_iterations = 0);

/// Simulates a fresh ensemble from (t, x) and solves backward; the standard
/// error comes from a path bootstrap of the final averaging step.
std::pair<double, double> value_function(const CoefficientModel& model, const Driver& driver,
                                         const SegmentFunctional& terminal, double t,
                                         const Segment& x, const SolverConfig& config);

/// Gradient mass at the current-time node, recovered from z = g . sigma by a
/// right pseudo-inverse; requires sigma sigma^T invertible at (k, path).
Vec spot_gradient(const BsdeSolution& solution, const CoefficientModel& model,
                  const PathEnsemble& ens, Index k, Index path);

struct ZIdentReport {
  Vec regression_estimate;  // n components
  Vec bump_estimate;
  Vec regression_se;
  Vec bump_se;
  double mean_rel_error = 0.0;
  double max_rel_error = 0.0;
  double bump_delta = 0.0;
  double bump_width = 0.0;
};

/// Compares the regression gradient (from Z / sigma at the start) against a
/// central-difference bump of the value function in a hat direction at the
/// current-time node, on common noise.
ZIdentReport z_identification_check(const CoefficientModel& model, const Driver& driver,
                                    const SegmentFunctional& terminal, double t, const Segment& x,
                                    const SolverConfig& config);

void write_solution_csv(const BsdeSolution& solution, const std::string& path);
void write_solution_coefficients_json(const BsdeSolution& solution, const std::string& path);

}  // namespace dfb
