#pragma once

// Independent oracles for the test suite.  These deliberately avoid the
// library's simulation and regression code paths.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

/**
 * Method-of-steps integration of the deterministic delay equation
 *   y'(tau) = a * y(tau - r) + c,   y = history on [-r, 0],
 * by midpoint RK2 on a fine grid with linear interpolation of the past.
 * With fine_dt ~ 1e-4 the result is accurate far below the tolerances used
 * against it.
 */
inline double dde_method_of_steps(double a, double c, double r,
                                  const std::function<double(double)>& history, double horizon,
                                  double fine_dt = 1e-4) {
  const auto steps = static_cast<long>(std::llround(horizon / fine_dt));
  const double dt = horizon / static_cast<double>(steps);
  const auto lag_steps = static_cast<long>(std::llround(r / dt));
  std::vector<double> y(static_cast<std::size_t>(steps + lag_steps + 1));
  for (long i = 0; i <= lag_steps; ++i)
    y[static_cast<std::size_t>(i)] = history(-r + dt * static_cast<double>(i));
  auto lagged = [&](double tau) {
    const double u = (tau + r) / dt;
    const auto j = static_cast<long>(std::floor(u));
    const double w = u - static_cast<double>(j);
    const auto lo = static_cast<std::size_t>(std::max(0l, j));
    const auto hi = std::min(lo + 1, y.size() - 1);
    return (1.0 - w) * y[lo] + w * y[hi];
  };
  for (long i = 0; i < steps; ++i) {
    const double tau = dt * static_cast<double>(i);
    const double yi = y[static_cast<std::size_t>(lag_steps + i)];
    const double k1 = a * lagged(tau - r) + c;
    const double k2 = a * lagged(tau + 0.5 * dt - r) + c;
    (void)k1;
    y[static_cast<std::size_t>(lag_steps + i + 1)] = yi + dt * k2;
  }
  return y[static_cast<std::size_t>(lag_steps + steps)];
}

/// Central finite difference of a scalar function of a scalar parameter.
inline double central_difference(const std::function<double(double)>& f, double eps) {
  return (f(eps) - f(-eps)) / (2.0 * eps);
}

}  // namespace oracle
