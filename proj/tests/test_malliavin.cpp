#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dfb/malliavin.hpp"

using namespace dfb;

namespace {

constexpr std::uint64_t kSeed = 77;

}  // namespace

TEST_CASE("state-independent coefficients propagate sigma unchanged") {
  const GridSpec g = GridSpec::make(0.2, 10, 1, 1);
  const CoefficientModel model = model_constant_sigma(g, 0.7);
  const Segment x = constant_segment(g, 1.0);
  const Index steps = 30;
  const NoiseGrid noise(kSeed, 16, 1, g.step_h, steps);
  const PathEnsemble ens = simulate_forward(model, 0.0, x, noise);
  const Index base = 5;
  const MalliavinState state = propagate_derivative(model, ens, base);
  for (Index p = 0; p < ens.num_paths; ++p) {
    const Mat& d = state.deriv[static_cast<std::size_t>(p)][0];
    // structural zeros before the base step
    for (Index k = 0; k < base; ++k) CHECK(d(0, g.past_points_m + k) == 0.0);
    for (Index j = 0; j < g.past_points_m; ++j) CHECK(d(0, j) == 0.0);
    // initial value and flat continuation
    for (Index k = base; k <= steps; ++k) CHECK(d(0, g.past_points_m + k) == 0.7);
  }
}

TEST_CASE("linear spot drift gives the exponential sensitivity") {
  // b = a x(0), sigma = 1: the sensitivity solves dD = a D dt, D_s = 1.
  const double a = 0.8;
  const GridSpec g = GridSpec::make(0.1, 10, 1, 1);
  const CoefficientModel model = model_linear_spot(g, a, 1.0);
  const Segment x = constant_segment(g, 0.3);
  const Index steps = 60;
  const NoiseGrid noise(kSeed + 1, 64, 1, g.step_h, steps);
  const PathEnsemble ens = simulate_forward(model, 0.0, x, noise);
  const Index base = 10;
  const MalliavinState state = propagate_derivative(model, ens, base);
  for (Index p = 0; p < ens.num_paths; ++p) {
    const Mat& d = state.deriv[static_cast<std::size_t>(p)][0];
    for (Index k = base; k <= steps; ++k) {
      const double span = g.step_h * static_cast<double>(k - base);
      CHECK(std::abs(d(0, g.past_points_m + k) - std::exp(a * span)) <= 5.0 * g.step_h);
    }
  }
}

TEST_CASE("chain rule: identity functional returns the derivative itself") {
  const GridSpec g = GridSpec::make(0.2, 8, 1, 1);
  const CoefficientModel model = model_sin_cos(g, 0.1);
  const Segment x = constant_segment(g, 0.5);
  const Index steps = 20;
  const NoiseGrid noise(kSeed + 2, 32, 1, g.step_h, steps);
  const PathEnsemble ens = simulate_forward(model, 0.0, x, noise);
  const MalliavinState state = propagate_derivative(model, ens, 4);
  const Mat values = chain_rule(spot(), state, ens, 15);
  for (Index p = 0; p < ens.num_paths; ++p)
    CHECK(values(p, 0) == state.deriv[static_cast<std::size_t>(p)][0](0, g.past_points_m + 15));
}

TEST_CASE("chain rule vanishes where the derivative window is still zero") {
  // gradient supported at -r only, evaluated so soon after the base step that
  // the lagged slot predates it
  const GridSpec g = GridSpec::make(0.2, 10, 1, 1);
  const CoefficientModel model = model_sin_cos(g, 0.1);
  const Segment x = constant_segment(g, 0.4);
  const Index steps = 20;
  const NoiseGrid noise(kSeed + 3, 32, 1, g.step_h, steps);
  const PathEnsemble ens = simulate_forward(model, 0.0, x, noise);
  const Index base = 8;
  const MalliavinState state = propagate_derivative(model, ens, base);
  const Mat values = chain_rule(lag_component(-g.delay_r, 0), state, ens, base + 3);
  for (Index p = 0; p < ens.num_paths; ++p) CHECK(values(p, 0) == 0.0);
}

TEST_CASE("bump oracle reproduces the exponential closed form") {
  const double a = 0.8;
  const GridSpec g = GridSpec::make(0.1, 10, 1, 1);
  const CoefficientModel model = model_linear_spot(g, a, 1.0);
  const Segment x = constant_segment(g, 0.3);
  const Index steps = 60;
  const Index base = 10;
  const NoiseGrid noise(kSeed + 4, 16, 1, g.step_h, steps);
  const Mat sensitivities = bump_oracle(model, 0.0, x, noise, base, 1e-4, steps, spot());
  const double expected = std::exp(a * g.step_h * static_cast<double>(steps - base));
  for (Index p = 0; p < sensitivities.rows(); ++p)
    CHECK(std::abs(sensitivities(p, 0) - expected) <= 6.0 * g.step_h);
}

TEST_CASE("quadratic functional: chain rule equals 2 y D and matches the bump") {
  const GridSpec g = GridSpec::make(0.1, 20, 1, 1);
  const CoefficientModel model = model_sin_cos(g, 0.1);
  const Segment x = constant_segment(g, 1.0);
  const Index steps = 100;  // dt = 5e-3
  const Index base = 20;
  const Index n = 200;
  const NoiseGrid noise(kSeed + 5, n, 1, g.step_h, steps);
  const PathEnsemble ens = simulate_forward(model, 0.0, x, noise);
  const MalliavinState state = propagate_derivative(model, ens, base);

  const Mat chain = chain_rule(spot_squared(), state, ens, steps);
  for (Index p = 0; p < n; ++p) {
    const double y_t = ens.state(p, steps)[0];
    const double d_t = state.deriv[static_cast<std::size_t>(p)][0](0, g.past_points_m + steps);
    CHECK(chain(p, 0) == doctest::Approx(2.0 * y_t * d_t).epsilon(1e-12));
  }

  const Mat bumps = bump_oracle(model, 0.0, x, noise, base, 1e-4, steps, spot_squared());
  Index close = 0;
  for (Index p = 0; p < n; ++p) {
    const double rel =
        std::abs(chain(p, 0) - bumps(p, 0)) / std::max(std::abs(bumps(p, 0)), 1e-8);
    if (rel <= 5e-2) ++close;
  }
  CHECK(close >= (n * 95) / 100);
}

TEST_CASE("sin/cos scenario meets the pathwise 1% criterion at dt = 1e-3") {
  const GridSpec g = GridSpec::make(0.1, 100, 1, 1);  // dt = 1e-3
  const CoefficientModel model = model_sin_cos(g, 0.1);
  const Segment x = constant_segment(g, 1.0);
  const Index steps = 250;
  const Index base = 50;
  const Index n = 400;
  const NoiseGrid noise(kSeed + 6, n, 1, g.step_h, steps);
  const PathEnsemble ens = simulate_forward(model, 0.0, x, noise, 2);
  const MalliavinState state = propagate_derivative(model, ens, base, 2);
  const Mat chain = chain_rule(spot_squared(), state, ens, steps, 2);
  const Mat bumps = bump_oracle(model, 0.0, x, noise, base, 1e-4, steps, spot_squared(), 2);
  Index close = 0;
  for (Index p = 0; p < n; ++p) {
    const double rel =
        std::abs(chain(p, 0) - bumps(p, 0)) / std::max(std::abs(bumps(p, 0)), 1e-8);
    if (rel <= 1e-2) ++close;
  }
  CHECK(close >= (n * 95) / 100);
}

TEST_CASE("propagation scales linearly in the coefficient gradients") {
  // frozen coefficients with constant-measure gradients; the first increment
  // after the base step scales exactly with the gradients
  const GridSpec g = GridSpec::make(0.2, 10, 1, 1);
  const double lambda = 2.5;
  auto make_model = [&](double scale) {
    CoefficientModel m = model_constant_sigma(g, 1.0);
    m.drift_gradient = [g, scale](double, const Segment&) {
      return std::vector<WindowMeasure>{dirac_measure(g, 0.0, Vec::Constant(1, scale * 0.4))};
    };
    m.diffusion_gradient = [g, scale](double, const Segment&) {
      return std::vector<WindowMeasure>{
          dirac_measure(g, -g.delay_r, Vec::Constant(1, scale * 0.2))};
    };
    return m;
  };
  const Segment x = constant_segment(g, 1.0);
  const NoiseGrid noise(kSeed + 7, 16, 1, g.step_h, 12);
  const PathEnsemble ens = simulate_forward(make_model(1.0), 0.0, x, noise);
  const Index base = 3;
  const MalliavinState s1 = propagate_derivative(make_model(1.0), ens, base);
  const MalliavinState s2 = propagate_derivative(make_model(lambda), ens, base);
  for (Index p = 0; p < ens.num_paths; ++p) {
    const Mat& d1 = s1.deriv[static_cast<std::size_t>(p)][0];
    const Mat& d2 = s2.deriv[static_cast<std::size_t>(p)][0];
    const double inc1 = d1(0, g.past_points_m + base + 1) - d1(0, g.past_points_m + base);
    const double inc2 = d2(0, g.past_points_m + base + 1) - d2(0, g.past_points_m + base);
    CHECK(inc2 == doctest::Approx(lambda * inc1).epsilon(1e-12));
  }
}

TEST_CASE("missing gradients are a configuration error") {
  const GridSpec g = GridSpec::make(0.2, 4, 1, 1);
  CoefficientModel model = model_constant_sigma(g, 1.0);
  model.drift_gradient = nullptr;
  const NoiseGrid noise(kSeed + 8, 4, 1, g.step_h, 8);
  const PathEnsemble ens =
      simulate_forward(model_constant_sigma(g, 1.0), 0.0, constant_segment(g, 1.0), noise);
  CHECK_THROWS_AS(propagate_derivative(model, ens, 2), ConfigError);
}
