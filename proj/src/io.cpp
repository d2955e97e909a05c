#include "dfb/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dfb {

using nlohmann::json;

namespace {

json grid_to_json_obj(const GridSpec& g) {
  return json{{"delay_r", g.delay_r},
              {"step_h", g.step_h},
              {"past_points_m", g.past_points_m},
              {"dim_n", g.dim_n},
              {"dim_d", g.dim_d}};
}

GridSpec grid_from_json_obj(const json& j) {
  const GridSpec g = GridSpec::make(j.at("delay_r").get<double>(), j.at("past_points_m").get<int>(),
                                    j.value("dim_n", 1), j.value("dim_d", 1));
  if (j.contains("step_h") &&
      std::abs(j.at("step_h").get<double>() - g.step_h) > 1e-12 * std::max(1.0, g.step_h))
    throw ConfigError("grid: step_h inconsistent with delay_r / past_points_m");
  return g;
}

json matrix_to_json_cols(const Mat& m) {
  json cols = json::array();
  for (Index j = 0; j < m.cols(); ++j) {
    json col = json::array();
    for (Index i = 0; i < m.rows(); ++i) col.push_back(m(i, j));
    cols.push_back(std::move(col));
  }
  return cols;
}

Mat matrix_from_json_cols(const json& cols, Index rows) {
  Mat m(rows, static_cast<Index>(cols.size()));
  for (Index j = 0; j < m.cols(); ++j) {
    const json& col = cols.at(static_cast<std::size_t>(j));
    if (static_cast<Index>(col.size()) != rows)
      throw ConfigError("matrix: column length mismatch");
    for (Index i = 0; i < rows; ++i) m(i, j) = col.at(static_cast<std::size_t>(i)).get<double>();
  }
  return m;
}

}  // namespace

std::string segment_to_json(const Segment& x) {
  json j{{"grid", grid_to_json_obj(x.grid)}, {"values", matrix_to_json_cols(x.values)}};
  return j.dump();
}

Segment segment_from_json(const std::string& text) {
  const json j = json::parse(text);
  const GridSpec g = grid_from_json_obj(j.at("grid"));
  return make_segment(g, matrix_from_json_cols(j.at("values"), g.dim_n));
}

std::string measure_to_json(const WindowMeasure& mu) {
  json atoms = json::array();
  for (const auto& [theta, mass] : mu.interior_atoms) {
    json entry = json::array();
    entry.push_back(theta);
    json vals = json::array();
    for (Index i = 0; i < mass.size(); ++i) vals.push_back(mass[i]);
    entry.push_back(std::move(vals));
    atoms.push_back(std::move(entry));
  }
  json atom0 = json::array();
  for (Index i = 0; i < mu.atom_at_zero.size(); ++i) atom0.push_back(mu.atom_at_zero[i]);
  json j{{"grid", grid_to_json_obj(mu.grid)},
         {"atom0", std::move(atom0)},
         {"atoms", std::move(atoms)},
         {"density", matrix_to_json_cols(mu.density_weights)}};
  return j.dump();
}

WindowMeasure measure_from_json(const std::string& text) {
  const json j = json::parse(text);
  const GridSpec g = grid_from_json_obj(j.at("grid"));
  const json& atom0 = j.at("atom0");
  WindowMeasure mu = zero_measure(g, static_cast<Index>(atom0.size()));
  for (Index i = 0; i < mu.dim(); ++i) mu.atom_at_zero[i] = atom0.at(static_cast<std::size_t>(i));
  for (const json& entry : j.at("atoms")) {
    Vec mass(mu.dim());
    const json& vals = entry.at(1);
    for (Index i = 0; i < mu.dim(); ++i) mass[i] = vals.at(static_cast<std::size_t>(i));
    mu.interior_atoms.emplace_back(entry.at(0).get<double>(), std::move(mass));
  }
  mu.density_weights = matrix_from_json_cols(j.at("density"), mu.dim());
  return mu;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_text_file: cannot open " + path);
  out << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("read_text_file: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

NoiseGrid Scenario::make_noise() const {
  return NoiseGrid(seed, paths, grid.dim_d, dt, steps_between(t0, horizon_T, dt));
}

SolverConfig Scenario::solver_config() const {
  SolverConfig c;
  c.seed = seed;
  c.num_paths = paths;
  c.horizon_T = horizon_T;
  c.threads = threads;
  return c;
}

namespace {

CoefficientModel model_from_json(const json& j, const GridSpec& grid, std::string& name) {
  name = j.at("name").get<std::string>();
  if (name == "constant_sigma") return model_constant_sigma(grid, j.value("sigma", 1.0));
  if (name == "pure_delay")
    return model_pure_delay(grid, j.value("a", 1.0), j.value("sigma", 0.0));
  if (name == "linear_spot")
    return model_linear_spot(grid, j.value("a", 1.0), j.value("sigma", 1.0));
  if (name == "sin_cos") return model_sin_cos(grid, j.value("amp", 0.1));
  if (name == "geometric")
    return model_geometric(grid, j.value("rho", 0.05), j.value("vol", 0.2));
  if (name == "delay_drift_cos_vol")
    return model_delay_drift_cos_vol(grid, j.value("a", 0.3), j.value("amp", 0.1));
  throw ConfigError("model: unknown name '" + name + "'");
}

SegmentFunctional terminal_from_json(const json& j, const GridSpec& grid, std::string& name) {
  name = j.at("name").get<std::string>();
  if (name == "spot") return spot();
  if (name == "spot_squared") return spot_squared();
  if (name == "lag") return lag_component(j.value("theta", -grid.delay_r), 0);
  if (name == "window_mean") return window_mean(grid);
  if (name == "spot_times_lag") return product(spot(), lag_component(-grid.delay_r, 0));
  if (name == "constant") return constant_functional(j.value("value", 0.0));
  if (name == "call") return call_payoff(j.value("strike", 100.0));
  if (name == "smoothed_call")
    return smoothed_call_payoff(j.value("strike", 100.0), j.value("beta", 50.0));
  if (name == "window_average_call")
    return smoothed_window_average_call(grid, j.value("strike", 100.0), j.value("beta", 50.0));
  if (name == "fixed_lag_call")
    return smoothed_lag_call_payoff(-grid.delay_r, j.value("strike", 100.0),
                                    j.value("beta", 50.0));
  throw ConfigError("terminal: unknown name '" + name + "'");
}

Driver driver_from_json(const json& j, std::string& name, const ControlParams& control,
                        const SegmentFunctional& terminal) {
  name = j.at("name").get<std::string>();
  if (name == "zero") return zero_driver();
  if (name == "discount") return discount_driver(j.value("rho", 0.05));
  if (name == "quadratic_ball") {
    const ControlProblem problem =
        quadratic_ball_problem(control.radius, 1, terminal);
    return hamiltonian_driver(problem);
  }
  throw ConfigError("driver: unknown name '" + name + "'");
}

MarketModel market_from_json(const json& j, const GridSpec& grid, const Segment& initial) {
  const auto name = j.at("name").get<std::string>();
  if (name == "constant")
    return market_constant(grid, j.value("mu", 0.05), j.value("sigma", 0.2), j.value("rho", 0.05),
                           initial);
  if (name == "delayed_vol")
    return market_delayed_vol(grid, j.value("mu", 0.05), j.value("base_vol", 0.2),
                              j.value("amp", 0.1), j.value("rho", 0.05), initial);
  throw ConfigError("market: unknown name '" + name + "'");
}

Claim claim_from_json(const json& j, const GridSpec& grid) {
  const auto name = j.at("name").get<std::string>();
  if (name == "vanilla_call") return claim_vanilla_call(j.value("strike", 100.0));
  if (name == "smoothed_call")
    return claim_smoothed_call(j.value("strike", 100.0), j.value("beta", 50.0));
  if (name == "window_average_call")
    return claim_smoothed_window_average_call(grid, j.value("strike", 100.0),
                                              j.value("beta", 50.0));
  if (name == "fixed_lag_call")
    return claim_fixed_lag_call(grid, j.value("strike", 100.0), j.value("beta", 50.0));
  throw ConfigError("claim: unknown name '" + name + "'");
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text, const ScenarioOverrides& overrides) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: invalid JSON: ") + e.what());
  }

  Scenario s;
  if (overrides.seed)
    s.seed = *overrides.seed;
  else if (j.contains("seed"))
    s.seed = j.at("seed").get<std::uint64_t>();
  else
    throw ConfigError("scenario: a seed is mandatory; there is no entropy default");

  s.paths = overrides.paths ? *overrides.paths : j.value("paths", Index{1000});
  if (s.paths < 1) throw ConfigError("scenario: paths must be >= 1");
  s.threads = overrides.threads ? *overrides.threads : j.value("threads", 0);

  const json& jg = j.at("grid");
  s.grid = grid_from_json_obj(jg);

  const json& jt = j.at("time");
  s.t0 = jt.value("t0", 0.0);
  s.horizon_T = jt.at("horizon_T").get<double>();
  s.dt = overrides.dt ? *overrides.dt : jt.value("dt", s.grid.step_h);
  if (std::abs(static_cast<double>(s.grid.past_points_m) * s.dt - s.grid.delay_r) >
      1e-9 * std::max(1.0, s.grid.delay_r))
    throw ConfigError(
        "scenario: grid coupling violated: past_points_m * dt must equal delay_r "
        "(m = " +
        std::to_string(s.grid.past_points_m) + ", dt = " + std::to_string(s.dt) +
        ", r = " + std::to_string(s.grid.delay_r) + ")");
  steps_between(s.t0, s.horizon_T, s.dt);

  const json& ji = j.at("initial");
  if (ji.at("kind") == "constant")
    s.initial = constant_segment(s.grid, ji.value("value", 1.0));
  else if (ji.at("kind") == "values")
    s.initial = make_segment(s.grid, matrix_from_json_cols(ji.at("values"), s.grid.dim_n));
  else
    throw ConfigError("scenario: initial.kind must be 'constant' or 'values'");

  if (j.contains("control")) {
    const json& jc = j.at("control");
    s.control.radius = jc.value("radius", 1.0);
    s.control.num_constant = jc.value("num_constant", 20);
    s.control.num_piecewise = jc.value("num_piecewise", 10);
  }

  s.model = model_from_json(j.at("model"), s.grid, s.model_name);
  s.terminal = terminal_from_json(j.at("terminal"), s.grid, s.terminal_name);
  s.driver = driver_from_json(j.value("driver", json{{"name", "zero"}}), s.driver_name, s.control,
                              s.terminal);

  if (j.contains("market")) s.market = market_from_json(j.at("market"), s.grid, s.initial);
  if (j.contains("claim")) s.claim = claim_from_json(j.at("claim"), s.grid);

  if (j.contains("qv")) {
    const json& jq = j.at("qv");
    if (jq.contains("eps")) s.qv.eps_list = jq.at("eps").get<std::vector<double>>();
    s.qv.window_lo = jq.value("window_lo", s.t0);
    s.qv.window_hi = jq.value("window_hi", 0.0);
  } else {
    s.qv.window_lo = s.t0;
  }
  if (s.qv.window_hi == 0.0) s.qv.window_hi = s.t0 + 0.5 * (s.horizon_T - s.t0);

  if (j.contains("malliavin")) {
    const json& jm = j.at("malliavin");
    s.malliavin.base_time = jm.value("base_time", s.t0);
    s.malliavin.eval_time = jm.value("eval_time", s.horizon_T);
    s.malliavin.eps = jm.value("eps", 1e-4);
  } else {
    s.malliavin.base_time = s.t0;
    s.malliavin.eval_time = s.horizon_T;
  }

  // Canonical config echoed into reports: scientific parameters and the seed,
  // never the worker count.
  json resolved = j;
  resolved["seed"] = s.seed;
  resolved["paths"] = s.paths;
  resolved["time"]["dt"] = s.dt;
  resolved.erase("threads");
  s.resolved_json = resolved.dump(2);
  return s;
}

Scenario load_scenario(const std::string& path, const ScenarioOverrides& overrides) {
  return scenario_from_json_text(read_text_file(path), overrides);
}

void write_residual_json(const MildResidualReport& report, const MildResidualConfig& config,
                         const std::string& path) {
  json j{{"v", report.value},
         {"rhs", report.rhs},
         {"residual", report.residual},
         {"se", report.std_error},
         {"config",
          {{"paths", config.solver.num_paths},
           {"seed", config.solver.seed},
           {"horizon_T", config.solver.horizon_T},
           {"quad_stride", config.quad_stride},
           {"nested_audit", config.nested_audit}}}};
  write_text_file(path, j.dump(2) + "\n");
}

void write_solution_coefficients_json(const BsdeSolution& sol, const std::string& path) {
  json steps = json::array();
  for (Index k = 0; k < sol.num_steps; ++k) {
    json y = json::array();
    for (Index i = 0; i < sol.y_coeff.rows(); ++i) y.push_back(sol.y_coeff(i, k));
    json z = json::array();
    const Mat& zc = sol.z_coeff[static_cast<std::size_t>(k)];
    for (Index jcol = 0; jcol < zc.cols(); ++jcol) {
      json zj = json::array();
      for (Index i = 0; i < zc.rows(); ++i) zj.push_back(zc(i, jcol));
      z.push_back(std::move(zj));
    }
    steps.push_back(json{{"k", k}, {"time", sol.time(k)}, {"y", std::move(y)}, {"z", std::move(z)}});
  }
  json j{{"t0", sol.t0},
         {"dt", sol.dt},
         {"num_steps", sol.num_steps},
         {"value_at_start", sol.value_at_start},
         {"value_std_error", sol.value_std_error},
         {"steps", std::move(steps)}};
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace dfb
