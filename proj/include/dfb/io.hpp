#pragma once

#include <optional>
#include <string>

#include "dfb/control.hpp"
#include "dfb/kolmogorov.hpp"
#include "dfb/malliavin.hpp"
#include "dfb/market.hpp"
#include "dfb/quadvar.hpp"

namespace dfb {

std::string segment_to_json(const Segment& x);
Segment segment_from_json(const std::string& text);
std::string measure_to_json(const WindowMeasure& mu);
WindowMeasure measure_from_json(const std::string& text);

/// Command-line / environment overrides applied before validation.
struct ScenarioOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<Index> paths;
  std::optional<double> dt;
  std::optional<int> threads;
};

struct QvParams {
  std::vector<double> eps_list{0.04, 0.02, 0.01};
  double window_lo = 0.0;
  double window_hi = 0.0;  // 0 = auto: half the horizon
};

struct MalliavinParams {
  double base_time = 0.0;
  double eval_time = 0.0;  // 0 = auto: horizon
  double eps = 1e-4;
};

struct ControlParams {
  double radius = 1.0;
  int num_constant = 20;
  int num_piecewise = 10;
};

/**
 * A fully resolved experiment description.  `resolved_json` is the canonical
 * serialisation embedded into every report; it carries the seed and all
 * scientific parameters but not the worker count, which never affects
 * results.
 */
struct Scenario {
  std::uint64_t seed = 0;
  Index paths = 0;
  int threads = 1;
  GridSpec grid;
  double t0 = 0.0;
  double horizon_T = 0.0;
  double dt = 0.0;
  Segment initial;
  std::string model_name;
  CoefficientModel model;
  std::string driver_name;
  Driver driver;
  std::string terminal_name;
  SegmentFunctional terminal;
  std::optional<MarketModel> market;
  std::optional<Claim> claim;
  QvParams qv;
  MalliavinParams malliavin;
  ControlParams control;
  std::string resolved_json;

  NoiseGrid make_noise() const;
  SolverConfig solver_config() const;
};

/// Parses and validates a scenario file; ConfigError carries the diagnostic.
Scenario load_scenario(const std::string& path, const ScenarioOverrides& overrides = {});
Scenario scenario_from_json_text(const std::string& text, const ScenarioOverrides& overrides = {});

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace dfb
