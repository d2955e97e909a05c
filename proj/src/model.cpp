#include "dfb/model.hpp"

#include <cmath>

namespace dfb {

namespace {

std::vector<WindowMeasure> zero_gradients(const GridSpec& grid, std::size_t count) {
  return std::vector<WindowMeasure>(count, zero_measure(grid, grid.dim_n));
}

void require_scalar(const GridSpec& grid, const char* who) {
  if (grid.dim_n != 1 || grid.dim_d != 1)
    throw ConfigError(std::string(who) + ": scalar model needs dim_n == dim_d == 1");
}

}  // namespace

CoefficientModel model_constant_sigma(const GridSpec& grid, double sigma) {
  CoefficientModel m;
  const Index n = grid.dim_n;
  const Index d = grid.dim_d;
  m.drift_b = [n](double, const Segment&) { return Vec::Zero(n).eval(); };
  m.diffusion_sigma = [n, d, sigma](double, const Segment&) {
    return Mat::Constant(n, d, sigma).eval();
  };
  m.drift_gradient = [grid, n](double, const Segment&) {
    return zero_gradients(grid, static_cast<std::size_t>(n));
  };
  m.diffusion_gradient = [grid, n, d](double, const Segment&) {
    return zero_gradients(grid, static_cast<std::size_t>(n * d));
  };
  m.lipschitz_L = 0.0;
  m.growth_K = std::abs(sigma) + 1e-12;
  return m;
}

CoefficientModel model_pure_delay(const GridSpec& grid, double a, double sigma) {
  require_scalar(grid, "model_pure_delay");
  CoefficientModel m = model_constant_sigma(grid, sigma);
  m.drift_b = [](double, const Segment& x) { return x.values.col(0).eval(); };
  if (a != 1.0)
    m.drift_b = [a](double, const Segment& x) { return (a * x.values.col(0)).eval(); };
  m.drift_gradient = [grid, a](double, const Segment&) {
    return std::vector<WindowMeasure>{
        dirac_measure(grid, -grid.delay_r, Vec::Constant(1, a))};
  };
  m.lipschitz_L = std::abs(a);
  m.growth_K = std::abs(a) + std::abs(sigma);
  return m;
}

CoefficientModel model_linear_spot(const GridSpec& grid, double a, double sigma) {
  require_scalar(grid, "model_linear_spot");
  CoefficientModel m = model_constant_sigma(grid, sigma);
  m.drift_b = [a](double, const Segment& x) { return (a * x.current()).eval(); };
  m.drift_gradient = [grid, a](double, const Segment&) {
    return std::vector<WindowMeasure>{dirac_measure(grid, 0.0, Vec::Constant(1, a))};
  };
  m.lipschitz_L = std::abs(a);
  m.growth_K = std::abs(a) + std::abs(sigma);
  return m;
}

CoefficientModel model_sin_cos(const GridSpec& grid, double amp) {
  require_scalar(grid, "model_sin_cos");
  CoefficientModel m;
  m.drift_b = [](double, const Segment& x) {
    return Vec::Constant(1, std::sin(x.values(0, 0))).eval();
  };
  m.diffusion_sigma = [amp](double, const Segment& x) {
    return Mat::Constant(1, 1, 1.0 + amp * std::cos(x.values(0, x.grid.past_points_m))).eval();
  };
  m.drift_gradient = [grid](double, const Segment& x) {
    return std::vector<WindowMeasure>{
        dirac_measure(grid, -grid.delay_r, Vec::Constant(1, std::cos(x.values(0, 0))))};
  };
  m.diffusion_gradient = [grid, amp](double, const Segment& x) {
    const double now = x.values(0, x.grid.past_points_m);
    return std::vector<WindowMeasure>{
        dirac_measure(grid, 0.0, Vec::Constant(1, -amp * std::sin(now)))};
  };
  m.lipschitz_L = 1.0 + amp;
  m.growth_K = 2.0 + amp;
  return m;
}

CoefficientModel model_geometric(const GridSpec& grid, double rho, double vol) {
  require_scalar(grid, "model_geometric");
  CoefficientModel m;
  m.drift_b = [rho](double, const Segment& x) { return (rho * x.current()).eval(); };
  m.diffusion_sigma = [vol](double, const Segment& x) {
    return Mat::Constant(1, 1, vol * x.values(0, x.grid.past_points_m)).eval();
  };
  m.drift_gradient = [grid, rho](double, const Segment&) {
    return std::vector<WindowMeasure>{dirac_measure(grid, 0.0, Vec::Constant(1, rho))};
  };
  m.diffusion_gradient = [grid, vol](double, const Segment&) {
    return std::vector<WindowMeasure>{dirac_measure(grid, 0.0, Vec::Constant(1, vol))};
  };
  m.lipschitz_L = std::abs(rho) + std::abs(vol);
  m.growth_K = std::abs(rho) + std::abs(vol);
  return m;
}

CoefficientModel model_delay_drift_cos_vol(const GridSpec& grid, double a, double amp) {
  require_scalar(grid, "model_delay_drift_cos_vol");
  CoefficientModel m = model_sin_cos(grid, amp);
  m.drift_b = [a](double, const Segment& x) { return (a * x.values.col(0)).eval(); };
  m.drift_gradient = [grid, a](double, const Segment&) {
    return std::vector<WindowMeasure>{
        dirac_measure(grid, -grid.delay_r, Vec::Constant(1, a))};
  };
  m.lipschitz_L = std::abs(a) + amp;
  m.growth_K = std::abs(a) + 1.0 + amp;
  return m;
}

}  // namespace dfb
