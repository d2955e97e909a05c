#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dfb/quadvar.hpp"

using namespace dfb;

namespace {

constexpr std::uint64_t kSeed = 4242;

PathEnsemble brownian_ensemble(const GridSpec& g, Index n, Index steps, std::uint64_t seed) {
  const CoefficientModel model = model_constant_sigma(g, 1.0);
  return simulate_forward(model, 0.0, constant_segment(g, 0.0), NoiseGrid(seed, n, 1, g.step_h, steps), 2);
}

}  // namespace

TEST_CASE("constant u gives exactly zero") {
  const GridSpec g = GridSpec::make(0.2, 10, 1, 1);
  const PathEnsemble ens = brownian_ensemble(g, 32, 40, kSeed);
  const Mat u_values = Mat::Constant(ens.num_paths, ens.num_steps + 1, 3.0);
  const Mat w = wiener_component_path(ens, 0);
  const Vec c = joint_qv_estimate(u_values, w, ens.t0, ens.dt, 0.04, 0.0, 0.6);
  for (Index p = 0; p < c.size(); ++p) CHECK(c[p] == 0.0);
}

TEST_CASE("finite-variation u: |C^eps| <= K eps across the ladder") {
  const GridSpec g = GridSpec::make(0.2, 10, 1, 1);
  const Index steps = 60;
  const PathEnsemble ens = brownian_ensemble(g, 4000, steps, kSeed + 1);
  TimeFunctional u;
  u.value = [](double t, const Segment&) { return t; };
  u.gradient = [&g](double, const Segment&) { return zero_measure(g, 1); };
  const Mat u_values = functional_path_values(u, ens);
  const Mat w = wiener_component_path(ens, 0);
  const double t_hi = 0.8;
  const double k_const = 5.0 * std::sqrt(t_hi);
  for (double eps : {0.16, 0.08, 0.04}) {
    const Vec c = joint_qv_estimate(u_values, w, ens.t0, ens.dt, eps, 0.0, t_hi);
    const MeanSe m = mean_se(c.cwiseAbs());
    CHECK(m.mean <= k_const * eps);
  }
}

TEST_CASE("estimator is bilinear in the u increments") {
  const GridSpec g = GridSpec::make(0.2, 10, 1, 1);
  const PathEnsemble ens = brownian_ensemble(g, 16, 40, kSeed + 2);
  const Mat u_values = functional_path_values(as_time_functional(spot()), ens);
  const Mat w = wiener_component_path(ens, 0);
  const Vec c1 = joint_qv_estimate(u_values, w, ens.t0, ens.dt, 0.04, 0.0, 0.6);
  const Vec c2 = joint_qv_estimate((3.5 * u_values).eval(), w, ens.t0, ens.dt, 0.04, 0.0, 0.6);
  for (Index p = 0; p < c1.size(); ++p) CHECK(c2[p] == doctest::Approx(3.5 * c1[p]).epsilon(1e-14));
}

TEST_CASE("Brownian case: C^eps concentrates at the window length") {
  // u = x(0) on dy = dW: the limit is T' - t
  const GridSpec g = GridSpec::make(0.1, 10, 1, 1);
  const Index n = 10000;
  const Index steps = 60;
  const PathEnsemble ens = brownian_ensemble(g, n, steps, kSeed + 3);
  const Mat u_values = functional_path_values(as_time_functional(spot()), ens);
  const Mat w = wiener_component_path(ens, 0);
  const double t_hi = 0.5;
  const Vec c = joint_qv_estimate(u_values, w, ens.t0, ens.dt, 0.01, 0.0, t_hi);
  const MeanSe m = mean_se(c);
  CHECK(std::abs(m.mean - t_hi) <= 5.0 * m.std_error);
}

TEST_CASE("prediction: atomless gradients predict zero") {
  const GridSpec g = GridSpec::make(0.2, 10, 1, 1);
  const PathEnsemble ens = brownian_ensemble(g, 8, 30, kSeed + 4);
  const CoefficientModel model = model_constant_sigma(g, 1.0);
  const Vec pred =
      qv_prediction(model, as_time_functional(window_mean(g)), ens, 0.0, 0.4, 0);
  for (Index p = 0; p < pred.size(); ++p) CHECK(pred[p] == 0.0);
}

TEST_CASE("prediction for u = x(0) under constant sigma is sigma^2 (T' - t)") {
  const double sigma = 0.7;
  const GridSpec g = GridSpec::make(0.2, 10, 1, 1);
  const CoefficientModel model = model_constant_sigma(g, sigma);
  const PathEnsemble ens = simulate_forward(model, 0.0, constant_segment(g, 0.0),
                                            NoiseGrid(kSeed + 5, 8, 1, g.step_h, 30));
  const Vec pred = qv_prediction(model, as_time_functional(spot()), ens, 0.0, 0.4, 0);
  // mass at zero of the gradient of x(0) is 1, so the density is sigma
  for (Index p = 0; p < pred.size(); ++p)
    CHECK(pred[p] == doctest::Approx(sigma * 0.4).epsilon(1e-12));
}

TEST_CASE("lagged-product functional: prediction integrates sigma times the lag") {
  const GridSpec g = GridSpec::make(0.2, 20, 1, 1);
  const CoefficientModel model = model_sin_cos(g, 0.1);
  const PathEnsemble ens = simulate_forward(model, 0.0, constant_segment(g, 1.0),
                                            NoiseGrid(kSeed + 6, 4, 1, g.step_h, 50));
  const TimeFunctional u = as_time_functional(product(spot(), lag_component(-g.delay_r, 0)));
  const Vec pred = qv_prediction(model, u, ens, 0.0, 0.4, 0);
  for (Index p = 0; p < pred.size(); ++p) {
    double manual = 0.0;
    for (Index k = 0; k < 40; ++k) {
      const Segment w = ens.segment_at(p, k);
      manual += model.diffusion_sigma(ens.time(k), w)(0, 0) * w.values(0, 0) * ens.dt;
    }
    CHECK(pred[p] == doctest::Approx(manual).epsilon(1e-12));
  }
}

TEST_CASE("convergence study: Brownian oracle trend and final agreement") {
  const GridSpec g = GridSpec::make(0.1, 10, 1, 1);
  const CoefficientModel model = model_constant_sigma(g, 1.0);
  const NoiseGrid noise(kSeed + 7, 10000, 1, g.step_h, 70);
  const ConvergenceStudy study =
      convergence_study(model, as_time_functional(spot()), 0.0, constant_segment(g, 0.0),
                        {0.04, 0.02, 0.01}, noise, 0.0, 0.5, 0, 2);
  CHECK(study.rows.size() == 3);
  CHECK(study.decreasing_trend);
  CHECK(study.final_mean_within_5se);
}

TEST_CASE("convergence study: atomless gradient away from zero stays within noise") {
  // integral of x over [-r, -r/2]: atomless gradient with no mass near 0, so
  // the u increments never overlap the Wiener increment window
  const GridSpec g = GridSpec::make(0.1, 10, 1, 1);
  const CoefficientModel model = model_constant_sigma(g, 1.0);
  WindowIntegral wi;
  wi.mu = zero_measure(g, 1);
  for (Index j = 0; j <= g.past_points_m / 2; ++j) wi.mu.density_weights(0, j) = 1.0;
  wi.mu.density_weights(0, 0) = 0.5;
  wi.mu.density_weights(0, g.past_points_m / 2) = 0.5;
  wi.g = [](const Vec& v) { return v[0]; };
  wi.grad_g = [](const Vec& v) { return Vec::Ones(v.size()).eval(); };
  const SegmentFunctional u(std::move(wi));

  const NoiseGrid noise(kSeed + 8, 4000, 1, g.step_h, 70);
  const ConvergenceStudy study =
      convergence_study(model, as_time_functional(u), 0.0, constant_segment(g, 0.0),
                        {0.04, 0.02, 0.01}, noise, 0.0, 0.5, 0, 2);
  for (const auto& row : study.rows)
    CHECK(std::abs(row.mean_signed_error) <= 5.0 * row.signed_std_error);
}

TEST_CASE("window mean: the overlap bias dies out linearly in eps") {
  // gradient mass reaches the current-time node through the density, so the
  // finite-eps estimate carries an O(eps) boundary term; the limit is zero
  const GridSpec g = GridSpec::make(0.1, 10, 1, 1);
  const CoefficientModel model = model_constant_sigma(g, 1.0);
  const NoiseGrid noise(kSeed + 11, 4000, 1, g.step_h, 70);
  const ConvergenceStudy study =
      convergence_study(model, as_time_functional(window_mean(g)), 0.0,
                        constant_segment(g, 0.0), {0.04, 0.02, 0.01}, noise, 0.0, 0.5, 0, 2);
  CHECK(study.decreasing_trend);
  const double ratio10 = study.rows[1].mean_abs_error / study.rows[0].mean_abs_error;
  const double ratio21 = study.rows[2].mean_abs_error / study.rows[1].mean_abs_error;
  CHECK(ratio10 == doctest::Approx(0.5).epsilon(0.15));
  CHECK(ratio21 == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("convergence study: nonlinear model with the lagged product decreases") {
  const GridSpec g = GridSpec::make(0.25, 50, 1, 1);  // dt = 5e-3
  const CoefficientModel model = model_sin_cos(g, 0.1);
  const NoiseGrid noise(kSeed + 9, 4000, 1, g.step_h, 110);
  const TimeFunctional u = as_time_functional(product(spot(), lag_component(-g.delay_r, 0)));
  const ConvergenceStudy study = convergence_study(model, u, 0.0, constant_segment(g, 1.0),
                                                   {0.04, 0.02, 0.01}, noise, 0.0, 0.5, 0, 2);
  CHECK(study.decreasing_trend);
  CHECK(study.final_mean_within_5se);
}

TEST_CASE("window and step validation") {
  const GridSpec g = GridSpec::make(0.2, 10, 1, 1);
  const PathEnsemble ens = brownian_ensemble(g, 4, 30, kSeed + 10);
  const Mat u_values = functional_path_values(as_time_functional(spot()), ens);
  const Mat w = wiener_component_path(ens, 0);
  // eps off the grid
  CHECK_THROWS_AS(joint_qv_estimate(u_values, w, ens.t0, ens.dt, 0.013, 0.0, 0.4), ConfigError);
  // window end + eps beyond the horizon
  CHECK_THROWS_AS(joint_qv_estimate(u_values, w, ens.t0, ens.dt, 0.04, 0.0, 0.58),
                  std::domain_error);
}
