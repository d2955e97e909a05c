#include "dfb/verify.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace dfb {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

Segment random_segment(const GridSpec& g, std::uint64_t seed, std::uint32_t tag, double scale) {
  Mat v(g.dim_n, g.past_points_m + 1);
  for (Index i = 0; i < v.rows(); ++i)
    for (Index j = 0; j < v.cols(); ++j) {
      const auto z = gaussian_pair(seed, 2, tag, static_cast<std::uint32_t>(i),
                                   static_cast<std::uint32_t>(j));
      v(i, j) = scale * z[0];
    }
  return Segment{g, std::move(v)};
}

CheckResult check_segment_ops(const Scenario& s) {
  const GridSpec& g = s.grid;
  const Segment x = random_segment(g, s.seed, 11, 1.0);
  const Vec next = Vec::Constant(g.dim_n, 0.25);
  const Segment rolled = roll(x, next);
  double worst = 0.0;
  for (int j = 0; j + 1 <= g.past_points_m; ++j) {
    const double theta = g.theta(j);
    worst = std::max(worst,
                     (evaluate(rolled, theta) - evaluate(x, theta + g.step_h)).cwiseAbs().maxCoeff());
  }
  Mat ramp(1, g.past_points_m + 1);
  GridSpec gs = GridSpec::make(g.delay_r, g.past_points_m, 1, 1);
  for (int j = 0; j <= g.past_points_m; ++j) ramp(0, j) = gs.theta(j);
  const Segment linear = make_segment(gs, std::move(ramp));
  const double mid = evaluate(linear, -0.5 * gs.delay_r)[0];
  worst = std::max(worst, std::abs(mid + 0.5 * gs.delay_r));
  return {"segment_shift_and_interpolation", worst == 0.0, fmt("max deviation %.3g", worst)};
}

CheckResult check_gradient_pairing(const Scenario& s) {
  const GridSpec& g = s.grid;
  std::vector<SegmentFunctional> funcs;
  funcs.push_back(spot_squared());
  funcs.push_back(window_mean(g));
  funcs.push_back(product(spot(), lag_component(-g.delay_r, 0)));
  funcs.push_back(s.terminal);
  const double eps = 1e-5;
  double worst = 0.0;
  for (std::size_t fi = 0; fi < funcs.size(); ++fi) {
    for (std::uint32_t rep = 0; rep < 4; ++rep) {
      const Segment x = random_segment(g, s.seed, 100 + static_cast<std::uint32_t>(fi) * 8 + rep,
                                       1.0);
      const Segment dir = random_segment(g, s.seed, 200 + static_cast<std::uint32_t>(fi) * 8 + rep,
                                         1.0);
      Segment xp = x;
      xp.values += eps * dir.values;
      Segment xm = x;
      xm.values -= eps * dir.values;
      const double fd =
          (functional_eval(funcs[fi], xp) - functional_eval(funcs[fi], xm)) / (2.0 * eps);
      const double paired = pair_with(functional_gradient(funcs[fi], x), dir);
      const double err = std::abs(paired - fd) / std::max(std::abs(fd), 1e-3);
      worst = std::max(worst, err);
    }
  }
  return {"gradient_matches_directional_derivative", worst <= 1e-5,
          fmt("worst relative gap %.3g (tol 1e-5)", worst)};
}

CheckResult check_noise_moments(const Scenario& s) {
  const Index n = std::min<Index>(s.paths * 8, 100000);
  const NoiseGrid noise(s.seed, n, 1, s.dt, 1);
  Vec draws(n);
  for (Index p = 0; p < n; ++p) draws[p] = noise.increment(p, 0)[0];
  const MeanSe m = mean_se(draws);
  const VarSe v = variance_se(draws);
  const bool pass = std::abs(m.mean) <= 5.0 * m.std_error &&
                    std::abs(v.variance - s.dt) <= 5.0 * v.std_error;
  return {"noise_moments", pass,
          fmt("mean %.3g (se %.3g), var gap %.3g", m.mean, m.std_error, v.variance - s.dt)};
}

CheckResult check_thread_determinism(const Scenario& s) {
  const NoiseGrid noise(s.seed, std::min<Index>(s.paths, 256), s.grid.dim_d, s.dt,
                        std::min<Index>(steps_between(s.t0, s.horizon_T, s.dt), 32));
  const PathEnsemble a = simulate_forward(s.model, s.t0, s.initial, noise, 1);
  const PathEnsemble b = simulate_forward(s.model, s.t0, s.initial, noise, 2);
  const PathEnsemble c = simulate_forward(s.model, s.t0, s.initial, noise, 8);
  bool equal = true;
  for (Index p = 0; p < a.num_paths && equal; ++p)
    equal = a.y[static_cast<std::size_t>(p)] == b.y[static_cast<std::size_t>(p)] &&
            a.y[static_cast<std::size_t>(p)] == c.y[static_cast<std::size_t>(p)];
  return {"worker_count_determinism", equal,
          equal ? "1, 2 and 8 workers bitwise identical" : "worker count changed the result"};
}

CheckResult check_flow_property(const Scenario& s) {
  const Index steps = std::min<Index>(steps_between(s.t0, s.horizon_T, s.dt), 32);
  const NoiseGrid noise(s.seed, 16, s.grid.dim_d, s.dt, steps);
  const PathEnsemble full = simulate_forward(s.model, s.t0, s.initial, noise, 1);
  const Index half = steps / 2;
  // Restarting every path at (t_half, X_half) with the suffix substreams must
  // reproduce the original tails bitwise.
  double worst = 0.0;
  bool exact = true;
  for (Index p = 0; p < full.num_paths; ++p) {
    Mat ycur = full.segment_at(p, half).values;
    Segment window{s.grid, Mat(s.grid.dim_n, s.grid.past_points_m + 1)};
    const NoiseGrid keyed = noise.suffix(half);
    ycur.conservativeResize(s.grid.dim_n, s.grid.past_points_m + steps - half + 1);
    for (Index k = 0; k < steps - half; ++k) {
      const double tk = full.time(half + k);
      window.values = ycur.middleCols(k, s.grid.past_points_m + 1);
      ycur.col(s.grid.past_points_m + k + 1) =
          ycur.col(s.grid.past_points_m + k) + s.model.drift_b(tk, window) * s.dt +
          s.model.diffusion_sigma(tk, window) * keyed.increment(p, k);
    }
    const Mat yref = full.y[static_cast<std::size_t>(p)].rightCols(
        s.grid.past_points_m + steps - half + 1);
    exact = exact && (ycur == yref);
    worst = std::max(worst, (ycur - yref).cwiseAbs().maxCoeff());
  }
  return {"restart_flow_property", exact, fmt("max restart deviation %.3g", worst)};
}

CheckResult check_girsanov_unit_mean(const Scenario& s) {
  const PathEnsemble ens = simulate_forward(s.model, s.t0, s.initial, s.make_noise(), s.threads);
  const ChannelFn h = [](double, const Segment&, const Vec&) {
    return Vec::Constant(1, 0.3).eval();
  };
  const Policy none = Policy::none();
  Vec weights(ens.num_paths);
  for (Index p = 0; p < ens.num_paths; ++p) weights[p] = girsanov_weight(ens, p, h, none);
  const MeanSe m = mean_se(weights);
  const bool pass = std::abs(m.mean - 1.0) <= 5.0 * m.std_error;
  return {"change_of_measure_unit_mean", pass,
          fmt("mean %.6g, se %.3g", m.mean, m.std_error)};
}

CheckResult check_martingale_identity(const Scenario& s) {
  const NoiseGrid noise = s.make_noise();
  const PathEnsemble ens = simulate_forward(s.model, s.t0, s.initial, noise, s.threads);
  SolverConfig cfg = s.solver_config();
  const BsdeSolution sol = solve_backward(ens, zero_driver(), s.terminal,
                                          RegressionBasis::make_default(s.grid), cfg);
  Vec payoff(ens.num_paths);
  for (Index p = 0; p < ens.num_paths; ++p)
    payoff[p] = functional_eval(s.terminal, ens.segment_at(p, ens.num_steps));
  const double gap = std::abs(sol.value_at_start - payoff.mean());
  const double tol = 1e-6 * (1.0 + std::abs(sol.value_at_start));
  return {"zero_driver_telescoping", gap <= tol, fmt("gap %.3g (tol %.3g)", gap, tol)};
}

CheckResult check_value_cross_seed(const Scenario& s) {
  SolverConfig cfg = s.solver_config();
  const auto [v1, se1] = value_function(s.model, s.driver, s.terminal, s.t0, s.initial, cfg);
  cfg.seed = s.seed + 1;
  const auto [v2, se2] = value_function(s.model, s.driver, s.terminal, s.t0, s.initial, cfg);
  const double gap = std::abs(v1 - v2);
  const double tol = 5.0 * combined_se(se1, se2);
  return {"value_cross_seed_agreement", gap <= tol,
          fmt("values differ by %.4g (tol %.4g)", gap, tol)};
}

CheckResult check_qv_brownian(const Scenario& s) {
  const GridSpec g = GridSpec::make(s.grid.delay_r, s.grid.past_points_m, 1, 1);
  const CoefficientModel model = model_constant_sigma(g, 1.0);
  const Segment x0 = constant_segment(g, 0.0);
  const double horizon = s.t0 + 2.0 * (s.qv.window_hi - s.qv.window_lo) +
                         2.0 * s.qv.eps_list.front();
  const NoiseGrid noise(s.seed, std::min<Index>(s.paths, 4000), 1, s.dt,
                        steps_between(s.t0, horizon, s.dt));
  const ConvergenceStudy study =
      convergence_study(model, as_time_functional(spot()), s.t0, x0, s.qv.eps_list, noise,
                        s.qv.window_lo, s.qv.window_hi, 0, s.threads);
  const auto& last = study.rows.back();
  const bool pass = study.final_mean_within_5se;
  return {"brownian_joint_quadratic_variation", pass,
          fmt("final signed error %.4g (se %.4g)", last.mean_signed_error, last.signed_std_error)};
}

CheckResult check_z_identification(const Scenario& s) {
  SolverConfig cfg = s.solver_config();
  const ZIdentReport rep =
      z_identification_check(s.model, s.driver, s.terminal, s.t0, s.initial, cfg);
  // systematic tolerance plus the statistical resolution of both estimators
  // at the scenario's path count
  const double base = (s.driver_name == "zero" || s.driver_name == "discount") ? 0.05 : 0.10;
  const double scale =
      std::max(std::abs(rep.bump_estimate[0]), 1e-3 * (1.0 + std::abs(rep.bump_estimate[0])));
  const double tol =
      base + 5.0 * combined_se(rep.regression_se[0], rep.bump_se[0]) / scale;
  return {"gradient_mass_two_estimators", rep.mean_rel_error <= tol,
          fmt("relative gap %.4g (tol %.3g)", rep.mean_rel_error, tol)};
}

CheckResult check_price_consistency(const Scenario& s) {
  SolverConfig cfg = s.solver_config();
  const PriceResult res = price(*s.market, *s.claim, s.t0, s.initial, cfg);
  const double gap = std::abs(res.price - res.discounted_mean);
  const double tol = 5.0 * combined_se(res.price_se, res.discounted_mean_se);
  return {"price_two_estimators", gap <= tol,
          fmt("backward %.6g vs discounted %.6g (tol %.4g)", res.price, res.discounted_mean, tol)};
}

CheckResult check_risk_neutral_martingale(const Scenario& s) {
  const NoiseGrid noise = s.make_noise();
  const PathEnsemble ens = simulate_market(*s.market, PricingMeasure::RiskNeutral, s.t0, s.initial,
                                           noise, s.threads);
  Vec discounted(ens.num_paths);
  const double disc = std::exp(-s.market->rate_rho * (s.horizon_T - s.t0));
  for (Index p = 0; p < ens.num_paths; ++p)
    discounted[p] = disc * ens.state(p, ens.num_steps)[0];
  const MeanSe m = mean_se(discounted);
  const double spot0 = s.initial.values(0, s.grid.past_points_m);
  const bool pass = std::abs(m.mean - spot0) <= 5.0 * m.std_error;
  return {"risk_neutral_discounted_martingale", pass,
          fmt("discounted mean %.6g vs spot %.6g (se %.3g)", m.mean, spot0, m.std_error)};
}

}  // namespace

VerifyReport run_verification(const Scenario& s) {
  VerifyReport report;
  report.checks.push_back(check_segment_ops(s));
  report.checks.push_back(check_gradient_pairing(s));
  report.checks.push_back(check_noise_moments(s));
  report.checks.push_back(check_thread_determinism(s));
  report.checks.push_back(check_flow_property(s));
  report.checks.push_back(check_girsanov_unit_mean(s));
  report.checks.push_back(check_martingale_identity(s));
  report.checks.push_back(check_value_cross_seed(s));
  report.checks.push_back(check_qv_brownian(s));
  report.checks.push_back(check_z_identification(s));
  if (s.market && s.claim) {
    report.checks.push_back(check_price_consistency(s));
    report.checks.push_back(check_risk_neutral_martingale(s));
  }
  report.all_pass = true;
  for (const auto& c : report.checks) report.all_pass = report.all_pass && c.pass;
  return report;
}

std::string verify_report_json(const VerifyReport& report, const Scenario& scenario) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks)
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  nlohmann::json j{{"scenario", nlohmann::json::parse(scenario.resolved_json)},
                   {"checks", std::move(checks)},
                   {"all_pass", report.all_pass}};
  return j.dump(2) + "\n";
}

}  // namespace dfb
