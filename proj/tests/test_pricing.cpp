#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dfb/market.hpp"

using namespace dfb;

namespace {

constexpr std::uint64_t kSeed = 24680;

GridSpec market_grid(int m = 25, double r = 0.1) { return GridSpec::make(r, m, 1, 1); }

SolverConfig config(Index paths, double horizon, std::uint64_t seed = kSeed) {
  SolverConfig c;
  c.seed = seed;
  c.num_paths = paths;
  c.horizon_T = horizon;
  c.threads = 2;
  return c;
}

}  // namespace

TEST_CASE("normal cdf: reference values and symmetry") {
  // frozen against the classical table values
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-9));
  CHECK(normal_cdf(-1.0) == doctest::Approx(0.15865525393145705).epsilon(1e-9));
  CHECK(normal_cdf(2.0) == doctest::Approx(0.9772498680518208).epsilon(1e-9));
  for (double x : {-3.0, -0.7, 0.2, 1.4, 4.2})
    CHECK(normal_cdf(x) + normal_cdf(-x) == doctest::Approx(1.0).epsilon(1e-12));
  // agreement with the library complementary error function
  for (double x : {-2.5, -1.0, 0.0, 0.5, 1.5, 3.0})
    CHECK(normal_cdf(x) == doctest::Approx(0.5 * std::erfc(-x / std::sqrt(2.0))).epsilon(1e-9));
}

TEST_CASE("closed-form call: limits and the frozen reference point") {
  // strike -> 0: forward limit
  const BsFormula forward = bs_closed_form(100.0, 1e-9, 0.2, 0.05, 1.0);
  CHECK(forward.price == doctest::Approx(100.0).epsilon(1e-6));
  CHECK(forward.delta == doctest::Approx(1.0).epsilon(1e-6));

  // tiny volatility, out of the money: worthless
  const BsFormula otm = bs_closed_form(80.0, 100.0, 1e-4, 0.0, 1.0);
  CHECK(otm.price <= 1e-12);

  // reference point computed by this oracle and frozen: S = K = 100,
  // sigma = 0.2, rho = 0.05, T = 1
  const BsFormula at = bs_closed_form(100.0, 100.0, 0.2, 0.05, 1.0);
  CHECK(at.price == doctest::Approx(10.450583572185565).epsilon(1e-9));
  CHECK(at.delta == doctest::Approx(0.6368306511756191).epsilon(1e-9));

  CHECK_THROWS_AS(bs_closed_form(100.0, 100.0, -0.1, 0.0, 1.0), ConfigError);
}

TEST_CASE("risk premium: arithmetic and the volatility floor") {
  const GridSpec g = market_grid();
  const Segment s0 = constant_segment(g, 100.0);
  MarketModel market = market_constant(g, 0.1, 0.2, 0.05, s0);
  CHECK(risk_premium(market, 0.0, s0) == doctest::Approx(0.25).epsilon(1e-12));

  MarketModel mu_is_rho = market_constant(g, 0.05, 0.2, 0.05, s0);
  CHECK(risk_premium(mu_is_rho, 0.0, s0) == 0.0);

  MarketModel broken = market;
  broken.vol_sigma = [](double, const Segment&) { return 1e-6; };
  CHECK_THROWS_AS(risk_premium(broken, 0.0, s0), ModelViolation);
}

TEST_CASE("risk-neutral simulation: positivity and the discounted martingale") {
  const GridSpec g = market_grid();
  const Segment s0 = constant_segment(g, 100.0);
  const MarketModel market = market_constant(g, 0.1, 0.2, 0.05, s0);
  const Index steps = 250;
  const Index n = 20000;
  const NoiseGrid noise(kSeed, n, 1, g.step_h, steps);
  const PathEnsemble ens = simulate_market(market, PricingMeasure::RiskNeutral, 0.0, s0, noise, 2);
  Vec discounted(n);
  double min_price = 1e300;
  for (Index p = 0; p < n; ++p) {
    min_price = std::min(min_price, ens.y[static_cast<std::size_t>(p)].minCoeff());
    discounted[p] = std::exp(-0.05 * 1.0) * ens.state(p, steps)[0];
  }
  CHECK(min_price > 0.0);
  const MeanSe m = mean_se(discounted);
  CHECK(std::abs(m.mean - 100.0) <= 5.0 * m.std_error);
}

TEST_CASE("constant claim prices to its discounted value with no hedge") {
  const GridSpec g = market_grid();
  const Segment s0 = constant_segment(g, 100.0);
  const MarketModel market = market_constant(g, 0.05, 0.2, 0.05, s0);
  const Claim claim{constant_functional(7.0), "constant"};
  const SolverConfig cfg = config(4000, 1.0);
  const PriceResult res = price(market, claim, 0.0, s0, cfg);
  const double expected = 7.0 * std::exp(-0.05);
  CHECK(std::abs(res.price - expected) <= 5.0 * res.price_se + 1e-3);
  CHECK(std::abs(res.discounted_mean - expected) <= 1e-12);
  const double pi0 = hedge_strategy(res.solution, market, 0, s0);
  CHECK(std::abs(pi0) <= 0.05);
}

TEST_CASE("no-memory reduction: price and hedge against the closed form") {
  const GridSpec g = market_grid();
  const Segment s0 = constant_segment(g, 100.0);
  const MarketModel market = market_constant(g, 0.05, 0.2, 0.05, s0);
  const Claim claim = claim_vanilla_call(100.0);
  const SolverConfig cfg = config(40000, 1.0);
  const PriceResult res = price(market, claim, 0.0, s0, cfg);
  const BsFormula ref = bs_closed_form(100.0, 100.0, 0.2, 0.05, 1.0);

  CHECK(std::abs(res.price - ref.price) <= 5.0 * res.price_se + 0.005 * ref.price);
  CHECK(std::abs(res.price - res.discounted_mean) <=
        5.0 * combined_se(res.price_se, res.discounted_mean_se));

  // pi = Z / sigma tracks delta * S for a spot claim
  const double pi0 = hedge_strategy(res.solution, market, 0, s0);
  CHECK(std::abs(pi0 / 100.0 - ref.delta) <= 0.05);
}

TEST_CASE("window-average call is dominated by the vanilla call on common noise") {
  const GridSpec g = market_grid();
  const Segment s0 = constant_segment(g, 100.0);
  const MarketModel market = market_constant(g, 0.05, 0.2, 0.05, s0);
  const SolverConfig cfg = config(20000, 1.0);
  const PriceResult vanilla = price(market, claim_smoothed_call(100.0), 0.0, s0, cfg);
  const PriceResult averaged =
      price(market, claim_smoothed_window_average_call(g, 100.0), 0.0, s0, cfg);
  CHECK(averaged.price <=
        vanilla.price + 2.0 * combined_se(vanilla.price_se, averaged.price_se));
}

TEST_CASE("claim on the lagged price with a horizon inside the window hedges flat") {
  // T < r: the payoff is measurable at the start, so the hedge is ~0
  const GridSpec g = GridSpec::make(0.5, 50, 1, 1);
  Mat vals(1, 51);
  for (int j = 0; j <= 50; ++j) vals(0, j) = 95.0 + 0.2 * j;
  const Segment s0 = make_segment(g, std::move(vals));
  const MarketModel market = market_constant(g, 0.05, 0.2, 0.05, s0);
  const Claim claim = claim_fixed_lag_call(g, 100.0);
  const SolverConfig cfg = config(8000, 0.3);
  const PriceResult res = price(market, claim, 0.0, s0, cfg);
  const double pi0 = hedge_strategy(res.solution, market, 0, s0);
  CHECK(std::abs(pi0) <= 0.5);  // scale: the spot itself is ~100
  // and the price is the discounted known payoff
  const double lagged_at_T = evaluate(s0, -0.5 + 0.3)[0];
  const double known = softplus(lagged_at_T - 100.0, 50.0) * std::exp(-0.05 * 0.3);
  CHECK(std::abs(res.price - known) <= 5.0 * res.price_se + 0.01 * (1.0 + known));
}

TEST_CASE("replication: constant claim replicates to discretisation noise") {
  const GridSpec g = market_grid();
  const Segment s0 = constant_segment(g, 100.0);
  const MarketModel market = market_constant(g, 0.1, 0.2, 0.05, s0);
  const Claim claim{constant_functional(7.0), "constant"};
  const SolverConfig cfg = config(2000, 1.0);
  const ReplicationResult rep = replication_test(market, claim, 0.0, s0, cfg);
  CHECK(rep.l2_error <= 0.02 * 7.0);
}

TEST_CASE("replication: smoothed call under the physical measure") {
  const GridSpec g = market_grid();
  const Segment s0 = constant_segment(g, 100.0);
  const MarketModel market = market_constant(g, 0.1, 0.2, 0.05, s0);
  const Claim claim = claim_smoothed_call(100.0);
  const SolverConfig cfg = config(10000, 1.0);
  const ReplicationResult rep = replication_test(market, claim, 0.0, s0, cfg);
  CHECK(rep.l2_error / rep.price <= 0.10);
}

TEST_CASE("delayed-volatility market: floor holds and replication stays tight") {
  const GridSpec g = market_grid();
  const Segment s0 = constant_segment(g, 100.0);
  const MarketModel market = market_delayed_vol(g, 0.1, 0.2, 0.1, 0.05, s0);
  const Claim claim = claim_smoothed_call(100.0);
  const SolverConfig cfg = config(10000, 1.0);
  const ReplicationResult rep = replication_test(market, claim, 0.0, s0, cfg);
  CHECK(rep.l2_error / rep.price <= 0.15);
}

TEST_CASE("softplus payoffs are stable far in and out of the money") {
  CHECK(softplus(1000.0, 50.0) == doctest::Approx(1000.0).epsilon(1e-12));
  CHECK(softplus(-1000.0, 50.0) == 0.0);
  CHECK(softplus_derivative(1000.0, 50.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(softplus_derivative(-1000.0, 50.0) == doctest::Approx(0.0).epsilon(1e-12));
  // smoothing gap is at most log(2)/beta, attained at the strike
  CHECK(softplus(0.0, 50.0) == doctest::Approx(std::log(2.0) / 50.0).epsilon(1e-12));
}
