#pragma once

#include "dfb/sdde.hpp"

namespace dfb {

/// A real function of (t, window state) with a declared spatial gradient.
struct TimeFunctional {
  std::function<double(double, const Segment&)> value;
  std::function<WindowMeasure(double, const Segment&)> gradient;
};

/// Adapts a time-independent functional.
TimeFunctional as_time_functional(SegmentFunctional f);

/// u(t_k, X_k) for every path and time index: num_paths x (num_steps + 1).
Mat functional_path_values(const TimeFunctional& u, const PathEnsemble& ens, int threads = 1);

/// Component i of the driving noise accumulated along each path, zero at t0:
/// num_paths x (num_steps + 1).
Mat wiener_component_path(const PathEnsemble& ens, int component);

/**
 * Discrete two-sided increment correlation
 *   (1/eps) * sum_{t_k in [t_lo, t_hi]} (u_{k+e} - u_k)(W_{k+e} - W_k) dt
 * with e = eps/dt; one value per path.  eps must sit on the grid and the
 * window must satisfy t_hi + eps <= end of the grid.
 */
Vec joint_qv_estimate(const Mat& u_values, const Mat& w_values, double t0, double dt, double eps,
                      double t_lo, double t_hi);

/// Riemann sum of sigma^i(t_k, X_k) . (gradient mass at zero of u) over the
/// window; the predicted limit of the estimate, one value per path.
Vec qv_prediction(const CoefficientModel& model, const TimeFunctional& u, const PathEnsemble& ens,
                  double t_lo, double t_hi, int component, int threads = 1);

struct ConvergenceRow {
  double eps = 0.0;
  double mean_abs_error = 0.0;
  double std_error = 0.0;         // SE of the mean absolute error
  double mean_signed_error = 0.0;
  double signed_std_error = 0.0;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;  // ordered as the input eps list
  bool decreasing_trend = false;     // largest -> smallest eps within 2 SE slack
  bool final_mean_within_5se = false;
};

/// Runs the estimate-vs-prediction comparison over a ladder of eps values on
/// a common ensemble.
ConvergenceStudy convergence_study(const CoefficientModel& model, const TimeFunctional& u,
                                   double t, const Segment& x, const std::vector<double>& eps_list,
                                   const NoiseGrid& noise, double t_lo, double t_hi,
                                   int component = 0, int threads = 1);

void write_convergence_csv(const ConvergenceStudy& study, const std::string& path);

}  // namespace dfb
