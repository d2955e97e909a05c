#pragma once

#include <functional>
#include <vector>

#include "dfb/functional.hpp"
#include "dfb/segment.hpp"

namespace dfb {

/**
 * Coefficients of the delay dynamics dy = b(t, X) dt + sigma(t, X) dW.
 *
 * The gradients are optional; they are required only by the Malliavin layer.
 * drift_gradient returns one measure per output component of b,
 * diffusion_gradient one per matrix entry in row-major order (i * d + l).
 */
struct CoefficientModel {
  std::function<Vec(double, const Segment&)> drift_b;
  std::function<Mat(double, const Segment&)> diffusion_sigma;  // n x d
  std::function<std::vector<WindowMeasure>(double, const Segment&)> drift_gradient;
  std::function<std::vector<WindowMeasure>(double, const Segment&)> diffusion_gradient;
  double lipschitz_L = 0.0;
  double growth_K = 0.0;
};

// Stock of models used by the scenarios and the test suite.

/// b = 0, sigma constant (n x d filled with `sigma`).
CoefficientModel model_constant_sigma(const GridSpec& grid, double sigma);
/// b(t,x) = a * x(-r), sigma constant; scalar.
CoefficientModel model_pure_delay(const GridSpec& grid, double a, double sigma);
/// b(t,x) = a * x(0), sigma constant; scalar.
CoefficientModel model_linear_spot(const GridSpec& grid, double a, double sigma);
/// b(t,x) = sin(x(-r)), sigma(t,x) = 1 + amp * cos(x(0)); scalar.
CoefficientModel model_sin_cos(const GridSpec& grid, double amp = 0.1);
/// b(t,x) = rho * x(0), sigma(t,x) = vol * x(0); scalar geometric dynamics.
CoefficientModel model_geometric(const GridSpec& grid, double rho, double vol);
/// b(t,x) = a * x(-r), sigma(t,x) = 1 + amp * cos(x(0)); scalar.
CoefficientModel model_delay_drift_cos_vol(const GridSpec& grid, double a, double amp);

}  // namespace dfb
