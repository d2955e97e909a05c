#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "dfb/measure.hpp"

namespace dfb {

class SegmentFunctional;

/// F(x) = g(x(theta_1), ..., x(theta_k)); g sees the stacked R^{k n} vector.
struct Cylindrical {
  std::vector<double> thetas;
  std::function<double(const Vec&)> g;
  std::function<Vec(const Vec&)> grad_g;
};

/// F(x) = integral of g(x(theta)) against a scalar measure on [-r, 0].
struct WindowIntegral {
  WindowMeasure mu;  // dim 1
  std::function<double(const Vec&)> g;
  std::function<Vec(const Vec&)> grad_g;
};

/// F(x) = outer(F_1(x), ..., F_k(x)).
struct Composite {
  std::function<double(const Vec&)> outer;
  std::function<Vec(const Vec&)> grad_outer;
  std::vector<SegmentFunctional> parts;
};

/**
 * A real functional on the segment space with a declared gradient.  The
 * gradient is a WindowMeasure and the pairing <gradient, k> matches the
 * directional derivative of the functional along k.
 */
class SegmentFunctional {
 public:
  SegmentFunctional() : kind_(Cylindrical{{0.0}, nullptr, nullptr}) {}
  explicit SegmentFunctional(Cylindrical c, double growth_constant = 1.0, int growth_exponent = 0)
      : kind_(std::move(c)), growth_constant_(growth_constant), growth_exponent_(growth_exponent) {}
  explicit SegmentFunctional(WindowIntegral w, double growth_constant = 1.0, int growth_exponent = 0)
      : kind_(std::move(w)), growth_constant_(growth_constant), growth_exponent_(growth_exponent) {}
  explicit SegmentFunctional(Composite c, double growth_constant = 1.0, int growth_exponent = 0)
      : kind_(std::move(c)), growth_constant_(growth_constant), growth_exponent_(growth_exponent) {}

  double growth_constant() const { return growth_constant_; }
  int growth_exponent() const { return growth_exponent_; }

  const std::variant<Cylindrical, WindowIntegral, Composite>& kind() const { return kind_; }

 private:
  std::variant<Cylindrical, WindowIntegral, Composite> kind_;
  double growth_constant_ = 1.0;
  int growth_exponent_ = 0;
};

double functional_eval(const SegmentFunctional& f, const Segment& x);
WindowMeasure functional_gradient(const SegmentFunctional& f, const Segment& x);

// Builders for the functionals used throughout the project.

/// x -> x(theta)[component]
SegmentFunctional lag_component(double theta, int component = 0);
/// x -> x(0)[0]
SegmentFunctional spot();
/// x -> x(0)[0]^2
SegmentFunctional spot_squared();
/// x -> (1/r) * integral of x(theta)[0] d theta
SegmentFunctional window_mean(const GridSpec& grid);
/// x -> F1(x) * F2(x)
SegmentFunctional product(SegmentFunctional a, SegmentFunctional b);
/// x -> c
SegmentFunctional constant_functional(double c);
/// x -> max(x(0) - strike, 0); not differentiable at the strike.
SegmentFunctional call_payoff(double strike);
/// x -> softplus_beta(x(0) - strike), a smooth call.
SegmentFunctional smoothed_call_payoff(double strike, double beta);
/// x -> softplus_beta(x(lag_theta) - strike): claim on a lagged value.
SegmentFunctional smoothed_lag_call_payoff(double lag_theta, double strike, double beta);
/// x -> softplus_beta(window mean - strike).
SegmentFunctional smoothed_window_average_call(const GridSpec& grid, double strike, double beta);

/// Overflow-safe softplus pair: value and derivative of log(1+exp(beta z))/beta.
double softplus(double z, double beta);
double softplus_derivative(double z, double beta);

}  // namespace dfb
