// Experiment driver: loads a JSON scenario, dispatches to the numerical
// modules and writes deterministic reports (same config + seed => identical
// bytes, whatever the worker count).

#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dfb/io.hpp"
#include "dfb/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::int64_t seed = -1;
  std::int64_t paths = -1;
  double dt = 0.0;
  int threads = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "scenario JSON file")->required();
  cmd->add_option("--out", args.out_dir, "output directory")->envname("DELAYFBSDE_OUT");
  cmd->add_option("--seed", args.seed, "seed override")->envname("DELAYFBSDE_SEED");
  cmd->add_option("--paths", args.paths, "path count override")->envname("DELAYFBSDE_PATHS");
  cmd->add_option("--dt", args.dt, "time step override")->envname("DELAYFBSDE_DT");
  cmd->add_option("--threads", args.threads, "worker count (never affects results)")
      ->envname("DELAYFBSDE_THREADS");
}

dfb::Scenario load(const CommonArgs& args) {
  dfb::ScenarioOverrides ov;
  if (args.seed >= 0) ov.seed = static_cast<std::uint64_t>(args.seed);
  if (args.paths >= 0) ov.paths = static_cast<dfb::Index>(args.paths);
  if (args.dt > 0.0) ov.dt = args.dt;
  if (args.threads >= 0) ov.threads = args.threads;
  fs::create_directories(args.out_dir);
  return dfb::load_scenario(args.config_path, ov);
}

json scenario_echo(const dfb::Scenario& s) { return json::parse(s.resolved_json); }

void write_report(const std::string& out_dir, const std::string& name, const json& j) {
  dfb::write_text_file(out_dir + "/" + name, j.dump(2) + "\n");
}

int run_simulate(const CommonArgs& args) {
  const dfb::Scenario s = load(args);
  const dfb::PathEnsemble ens =
      dfb::simulate_forward(s.model, s.t0, s.initial, s.make_noise(), s.threads);
  dfb::write_ensemble_csv(ens, args.out_dir + "/ensemble.csv");
  dfb::write_ensemble_binary(ens, args.out_dir + "/ensemble.bin");
  dfb::Vec terminal(ens.num_paths);
  for (dfb::Index p = 0; p < ens.num_paths; ++p)
    terminal[p] = ens.state(p, ens.num_steps)[0];
  const dfb::MeanSe m = dfb::mean_se(terminal, s.threads);
  write_report(args.out_dir, "simulate_report.json",
               json{{"config", scenario_echo(s)},
                    {"num_paths", ens.num_paths},
                    {"num_steps", ens.num_steps},
                    {"terminal_mean", m.mean},
                    {"terminal_se", m.std_error}});
  std::printf("simulate: %lld paths, %lld steps, terminal mean %.6g (se %.2g)\n",
              static_cast<long long>(ens.num_paths), static_cast<long long>(ens.num_steps),
              m.mean, m.std_error);
  return 0;
}

int run_price(const CommonArgs& args) {
  const dfb::Scenario s = load(args);
  if (!s.market || !s.claim)
    throw dfb::ConfigError("price: scenario must define 'market' and 'claim'");
  dfb::SolverConfig cfg = s.solver_config();
  const dfb::PriceResult res = dfb::price(*s.market, *s.claim, s.t0, s.initial, cfg);
  const double hedge0 = dfb::hedge_strategy(res.solution, *s.market, 0, s.initial);
  const dfb::ReplicationResult rep =
      dfb::replication_test(*s.market, *s.claim, s.t0, s.initial, cfg);
  dfb::write_solution_csv(res.solution, args.out_dir + "/price_solution.csv");
  dfb::write_solution_coefficients_json(res.solution, args.out_dir + "/price_coefficients.json");

  const double consistency_gap = std::abs(res.price - res.discounted_mean);
  const double consistency_tol = 5.0 * dfb::combined_se(res.price_se, res.discounted_mean_se);
  write_report(args.out_dir, "price_report.json",
               json{{"config", scenario_echo(s)},
                    {"price", res.price},
                    {"se", res.price_se},
                    {"hedge0", hedge0},
                    {"replication_l2", rep.l2_error},
                    {"checks",
                     {{"discounted_price", res.discounted_mean},
                      {"discounted_price_se", res.discounted_mean_se},
                      {"price_consistency_gap", consistency_gap},
                      {"price_consistency_pass", consistency_gap <= consistency_tol},
                      {"replication_l2_over_price", rep.l2_error / std::max(res.price, 1e-12)}}}});
  std::printf("price: %.6g (se %.2g), hedge0 %.6g, replication L2 %.4g\n", res.price,
              res.price_se, hedge0, rep.l2_error);
  return consistency_gap <= consistency_tol ? 0 : 1;
}

int run_control(const CommonArgs& args) {
  const dfb::Scenario s = load(args);
  const dfb::ControlProblem problem =
      dfb::quadratic_ball_problem(s.control.radius, 1, s.terminal);
  const dfb::MinimizerRule rule;
  const auto policies = dfb::make_tournament_policies(problem.U, s.control.num_constant,
                                                      s.control.num_piecewise, s.t0, s.horizon_T,
                                                      s.seed + 7);
  const dfb::FundamentalReport report = dfb::fundamental_relation_check(
      problem, s.model, rule, s.t0, s.initial, policies, s.solver_config());
  dfb::write_tournament_csv(report, args.out_dir + "/tournament.csv");
  write_report(args.out_dir, "control_report.json",
               json{{"config", scenario_echo(s)},
                    {"value", report.value},
                    {"value_se", report.value_se},
                    {"min_gap", report.min_gap},
                    {"feedback_cost", report.feedback.cost},
                    {"feedback_gap", report.feedback.gap},
                    {"any_violation", report.any_violation}});
  std::printf("control: v = %.6g (se %.2g), min policy gap %.4g, feedback gap %.4g\n",
              report.value, report.value_se, report.min_gap, report.feedback.gap);
  if (report.any_violation) {
    std::printf("FAIL: a policy undercut the value function beyond 5 SE\n");
    return 1;
  }
  return 0;
}

int run_qv(const CommonArgs& args) {
  const dfb::Scenario s = load(args);
  const dfb::ConvergenceStudy study = dfb::convergence_study(
      s.model, dfb::as_time_functional(s.terminal), s.t0, s.initial, s.qv.eps_list,
      s.make_noise(), s.qv.window_lo, s.qv.window_hi, 0, s.threads);
  dfb::write_convergence_csv(study, args.out_dir + "/qv.csv");
  json rows = json::array();
  for (const auto& row : study.rows)
    rows.push_back({{"epsilon", row.eps},
                    {"mean_abs_error", row.mean_abs_error},
                    {"std_error", row.std_error},
                    {"mean_signed_error", row.mean_signed_error},
                    {"signed_std_error", row.signed_std_error}});
  write_report(args.out_dir, "qv_report.json",
               json{{"config", scenario_echo(s)},
                    {"rows", std::move(rows)},
                    {"decreasing_trend", study.decreasing_trend},
                    {"final_mean_within_5se", study.final_mean_within_5se}});
  for (const auto& row : study.rows)
    std::printf("qv: eps %.4g  mean |err| %.5g (se %.2g)\n", row.eps, row.mean_abs_error,
                row.std_error);
  if (!study.decreasing_trend || !study.final_mean_within_5se) {
    std::printf("FAIL: quadratic-variation convergence criterion not met\n");
    return 1;
  }
  return 0;
}

int run_malliavin(const CommonArgs& args) {
  const dfb::Scenario s = load(args);
  const dfb::NoiseGrid noise = s.make_noise();
  const dfb::PathEnsemble ens = dfb::simulate_forward(s.model, s.t0, s.initial, noise, s.threads);
  const auto base_step =
      static_cast<dfb::Index>(std::llround((s.malliavin.base_time - s.t0) / s.dt));
  const auto eval_step =
      static_cast<dfb::Index>(std::llround((s.malliavin.eval_time - s.t0) / s.dt));
  const dfb::MalliavinState state = dfb::propagate_derivative(s.model, ens, base_step, s.threads);
  const dfb::Mat chain = dfb::chain_rule(s.terminal, state, ens, eval_step, s.threads);
  const dfb::Mat oracle = dfb::bump_oracle(s.model, s.t0, s.initial, noise, base_step,
                                           s.malliavin.eps, eval_step, s.terminal, s.threads);
  dfb::write_malliavin_csv(state, ens, args.out_dir + "/malliavin.csv");

  dfb::Index within = 0;
  double mean_rel = 0.0;
  for (dfb::Index p = 0; p < ens.num_paths; ++p) {
    const double scale = std::max(std::abs(oracle(p, 0)), 1e-8);
    const double rel = std::abs(chain(p, 0) - oracle(p, 0)) / scale;
    mean_rel += rel;
    if (rel <= 0.01) ++within;
  }
  mean_rel /= static_cast<double>(ens.num_paths);
  const double fraction = static_cast<double>(within) / static_cast<double>(ens.num_paths);
  write_report(args.out_dir, "malliavin_report.json",
               json{{"config", scenario_echo(s)},
                    {"mean_relative_error", mean_rel},
                    {"fraction_within_1pct", fraction}});
  std::printf("malliavin: mean relative error %.4g, %.1f%% of paths within 1%%\n", mean_rel,
              100.0 * fraction);
  if (fraction < 0.95) {
    std::printf("FAIL: chain rule vs bump oracle below the 95%% pathwise criterion\n");
    return 1;
  }
  return 0;
}

int run_verify(const CommonArgs& args) {
  const dfb::Scenario s = load(args);
  const dfb::VerifyReport report = dfb::run_verification(s);
  dfb::write_text_file(args.out_dir + "/verify_report.json", dfb::verify_report_json(report, s));
  for (const auto& c : report.checks)
    std::printf("%s  %s: %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
  if (!report.all_pass) {
    for (const auto& c : report.checks)
      if (!c.pass) std::printf("FAIL: criterion '%s' failed\n", c.name.c_str());
    return 1;
  }
  std::printf("all %zu checks passed\n", report.checks.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delayfbsde: a numerical laboratory for delay systems and their backward equations"};
  app.require_subcommand(1);

  CommonArgs args;
  int (*handler)(const CommonArgs&) = nullptr;

  auto* sim = app.add_subcommand("simulate", "forward ensembles to CSV/binary");
  add_common(sim, args);
  sim->callback([&] { handler = run_simulate; });
  auto* pr = app.add_subcommand("price", "pricing report for the scenario market");
  add_common(pr, args);
  pr->callback([&] { handler = run_price; });
  auto* ctl = app.add_subcommand("control", "policy tournament and feedback law");
  add_common(ctl, args);
  ctl->callback([&] { handler = run_control; });
  auto* qv = app.add_subcommand("qv", "joint quadratic variation convergence study");
  add_common(qv, args);
  qv->callback([&] { handler = run_qv; });
  auto* mal = app.add_subcommand("malliavin", "pathwise derivative vs bump oracle");
  add_common(mal, args);
  mal->callback([&] { handler = run_malliavin; });
  auto* ver = app.add_subcommand("verify", "property suite with pass/fail summary");
  add_common(ver, args);
  ver->callback([&] { handler = run_verify; });

  CLI11_PARSE(app, argc, argv);

  try {
    if (!handler) throw dfb::ConfigError("no subcommand selected");
    return handler(args);
  } catch (const dfb::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
