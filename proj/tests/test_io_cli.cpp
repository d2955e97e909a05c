#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "dfb/io.hpp"
#include "dfb/kolmogorov.hpp"
#include "dfb/verify.hpp"

using namespace dfb;
namespace fs = std::filesystem;

namespace {

const std::string kScenarioDir = DFB_SCENARIO_DIR;
const std::string kCli = DFB_CLI_PATH;

std::string temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("dfb_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

int run_cli(const std::string& args) {
  const int rc = std::system((kCli + " " + args + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("segment and measure JSON round-trips") {
  const GridSpec g = GridSpec::make(0.4, 8, 2, 1);
  Mat vals(2, 9);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 9; ++j) vals(i, j) = 0.1 * static_cast<double>(i + 1) * static_cast<double>(j);
  const Segment x = make_segment(g, vals);
  const Segment back = segment_from_json(segment_to_json(x));
  CHECK(back.values == x.values);
  CHECK(back.grid.delay_r == g.delay_r);

  WindowMeasure mu = zero_measure(g, 2);
  mu.atom_at_zero << 1.5, -0.5;
  mu.interior_atoms.emplace_back(-0.2, (Vec(2) << 0.3, 0.7).finished());
  mu.density_weights.setConstant(0.25);
  const WindowMeasure round = measure_from_json(measure_to_json(mu));
  CHECK(round.atom_at_zero == mu.atom_at_zero);
  CHECK(round.density_weights == mu.density_weights);
  REQUIRE(round.interior_atoms.size() == 1);
  CHECK(round.interior_atoms[0].first == -0.2);
  CHECK(pair_with(round, x) == doctest::Approx(pair_with(mu, x)).epsilon(1e-15));
}

TEST_CASE("ensemble binary round-trip") {
  const GridSpec g = GridSpec::make(0.2, 5, 1, 1);
  const CoefficientModel model = model_sin_cos(g, 0.1);
  const NoiseGrid noise(5, 7, 1, g.step_h, 9);
  const PathEnsemble ens = simulate_forward(model, 0.0, constant_segment(g, 1.0), noise);
  const std::string dir = temp_dir("bin");
  write_ensemble_binary(ens, dir + "/e.bin");
  const PathEnsemble back = read_ensemble_binary(dir + "/e.bin");
  CHECK(back.num_paths == ens.num_paths);
  CHECK(back.num_steps == ens.num_steps);
  for (Index p = 0; p < ens.num_paths; ++p) {
    CHECK(back.y[static_cast<std::size_t>(p)] == ens.y[static_cast<std::size_t>(p)]);
    CHECK(back.dw[static_cast<std::size_t>(p)] == ens.dw[static_cast<std::size_t>(p)]);
  }
}

TEST_CASE("scenario validation catches the broken grid coupling") {
  const std::string good = read_text_file(kScenarioDir + "/linear.json");
  CHECK_NOTHROW(scenario_from_json_text(good));

  // override dt so that m * dt != r
  ScenarioOverrides ov;
  ov.dt = 0.02;
  CHECK_THROWS_WITH_AS(scenario_from_json_text(good, ov), doctest::Contains("grid coupling"),
                       ConfigError);

  // a seed is mandatory
  CHECK_THROWS_WITH_AS(scenario_from_json_text(R"({"paths": 10})"), doctest::Contains("seed"),
                       ConfigError);
}

TEST_CASE("scenario resolves defaults and echoes the config without threads") {
  const Scenario s = load_scenario(kScenarioDir + "/linear.json");
  CHECK(s.seed == 20240601);
  CHECK(s.resolved_json.find("\"seed\"") != std::string::npos);
  CHECK(s.resolved_json.find("threads") == std::string::npos);
  CHECK(s.market.has_value());
  CHECK(s.claim.has_value());
}

TEST_CASE("verification battery passes on the bundled linear scenario") {
  ScenarioOverrides ov;
  ov.paths = 1500;  // keep the in-process run quick
  const Scenario s = load_scenario(kScenarioDir + "/linear.json", ov);
  const VerifyReport report = run_verification(s);
  for (const auto& c : report.checks) {
    INFO(c.name, ": ", c.detail);
    CHECK(c.pass);
  }
  CHECK(report.all_pass);
}

TEST_CASE("cli: verify exits 0 on the bundled linear scenario") {
  const std::string out = temp_dir("verify");
  const int rc = run_cli("verify --config " + kScenarioDir + "/linear.json --paths 1500 --out " + out);
  CHECK(rc == 0);
  CHECK(fs::exists(out + "/verify_report.json"));
}

TEST_CASE("cli: invalid grid coupling exits 2 and names the constraint") {
  const std::string out = temp_dir("badcfg");
  const std::string cmd = kCli + " verify --config " + kScenarioDir +
                          "/linear.json --dt 0.02 --out " + out + " 2> " + out + "/err.txt";
  const int rc = WEXITSTATUS(std::system(cmd.c_str()));
  CHECK(rc == 2);
  const std::string err = read_text_file(out + "/err.txt");
  CHECK(err.find("grid coupling") != std::string::npos);
  CHECK(err.find("past_points_m * dt") != std::string::npos);
}

TEST_CASE("cli: unknown option and missing config behave sanely") {
  CHECK(run_cli("verify") != 0);
  CHECK(run_cli("verify --config /nonexistent.json") == 2);
}

TEST_CASE("cli: price on the no-memory scenario matches the closed form") {
  const std::string out = temp_dir("price");
  const int rc = run_cli("price --config " + kScenarioDir + "/pricing_nomem.json --paths 20000 --out " + out);
  CHECK(rc == 0);
  const std::string report = read_text_file(out + "/price_report.json");
  // frozen closed-form reference for S = K = 100, sigma = 0.2, rho = 0.05, T = 1
  const double ref = 10.450583572185565;
  const auto pos = report.find("\"price\":");
  REQUIRE(pos != std::string::npos);
  const double priced = std::strtod(report.c_str() + pos + 8, nullptr);
  CHECK(std::abs(priced - ref) <= 0.05 * ref);
}

TEST_CASE("cli: simulate writes the ensemble artifacts") {
  const std::string out = temp_dir("sim");
  const int rc =
      run_cli("simulate --config " + kScenarioDir + "/dde_mean.json --paths 200 --out " + out);
  CHECK(rc == 0);
  CHECK(fs::exists(out + "/ensemble.csv"));
  CHECK(fs::exists(out + "/ensemble.bin"));
  const PathEnsemble back = read_ensemble_binary(out + "/ensemble.bin");
  CHECK(back.num_paths == 200);
  const std::string report = read_text_file(out + "/simulate_report.json");
  CHECK(report.find("\"seed\": 71006") != std::string::npos);
}

TEST_CASE("cli: environment variables override scenario parameters") {
  const std::string out = temp_dir("env");
  const std::string cmd = "DELAYFBSDE_PATHS=77 " + kCli + " simulate --config " + kScenarioDir +
                          "/dde_mean.json --out " + out + " > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  const std::string report = read_text_file(out + "/simulate_report.json");
  CHECK(report.find("\"paths\": 77") != std::string::npos);
}

TEST_CASE("residual report serialises to JSON") {
  const GridSpec g = GridSpec::make(0.2, 5, 1, 1);
  MildResidualConfig cfg;
  cfg.solver.seed = 3;
  cfg.solver.num_paths = 500;
  cfg.solver.horizon_T = 0.2;
  const MildResidualReport rep = mild_residual(model_constant_sigma(g, 0.4), zero_driver(),
                                               spot(), 0.0, constant_segment(g, 1.0), cfg);
  const std::string dir = temp_dir("resid");
  write_residual_json(rep, cfg, dir + "/residual.json");
  const std::string text = read_text_file(dir + "/residual.json");
  CHECK(text.find("\"residual\"") != std::string::npos);
  CHECK(text.find("\"rhs\"") != std::string::npos);
  CHECK(text.find("\"config\"") != std::string::npos);
}

TEST_CASE("cli: verify reports are byte-identical under 1, 2 and 8 workers") {
  const std::string base = temp_dir("det");
  std::string first;
  for (int workers : {1, 2, 8}) {
    const std::string out = base + "/w" + std::to_string(workers);
    fs::create_directories(out);
    const int rc = run_cli("verify --config " + kScenarioDir + "/linear.json --paths 1000 --threads " +
                           std::to_string(workers) + " --out " + out);
    CHECK(rc == 0);
    const std::string report = read_text_file(out + "/verify_report.json");
    if (first.empty())
      first = report;
    else
      CHECK(report == first);
  }
}
