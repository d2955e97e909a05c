#pragma once

#include "dfb/bsde.hpp"

namespace dfb {

/**
 * Single-asset market with memory: dS = mu(t, window) S dt + sigma(t, window) S dW
 * next to a riskless account growing at rate_rho.  The volatility carries a
 * declared positive floor.
 */
struct MarketModel {
  std::function<double(double, const Segment&)> drift_mu;
  std::function<double(double, const Segment&)> vol_sigma;
  double rate_rho = 0.0;
  double sigma_floor = 0.0;
  Segment initial_segment;
};

MarketModel market_constant(const GridSpec& grid, double mu, double sigma, double rho,
                            Segment initial);
/// sigma(t, x) = base_vol + amp * tanh(x(-r)/x(0) - 1): volatility reacting to
/// the ratio of the lagged price to the spot.
MarketModel market_delayed_vol(const GridSpec& grid, double mu, double base_vol, double amp,
                               double rho, Segment initial);

/// theta = (mu - rho) / sigma; throws ModelViolation below the sigma floor.
double risk_premium(const MarketModel& market, double t, const Segment& x);

enum class PricingMeasure { Physical, RiskNeutral };

/// Euler scheme on log S (positivity-preserving), drift mu under Physical and
/// rate_rho under RiskNeutral; the window still carries S itself.
PathEnsemble simulate_market(const MarketModel& market, PricingMeasure measure, double t,
                             const Segment& s, const NoiseGrid& noise, int threads = 1);

struct Claim {
  SegmentFunctional payoff;
  std::string id;
};

Claim claim_vanilla_call(double strike);
Claim claim_smoothed_call(double strike, double beta = 50.0);
Claim claim_smoothed_window_average_call(const GridSpec& grid, double strike, double beta = 50.0);
Claim claim_fixed_lag_call(const GridSpec& grid, double strike, double beta = 50.0);

struct PriceResult {
  double price = 0.0;
  double price_se = 0.0;
  double discounted_mean = 0.0;     // e^{-rho (T-t)} E[payoff], cross-check
  double discounted_mean_se = 0.0;
  BsdeSolution solution;
};

/// Fair price via the backward solve on the risk-neutral ensemble with the
/// discounting driver; the plain discounted expectation is reported alongside.
PriceResult price(const MarketModel& market, const Claim& claim, double t, const Segment& s,
                  const SolverConfig& config);

/// Position pi(t_k, window) = Z(t_k, window) / sigma(t_k, window).
double hedge_strategy(const BsdeSolution& solution, const MarketModel& market, Index k,
                      const Segment& x);

struct ReplicationResult {
  double price = 0.0;
  double price_se = 0.0;
  double l2_error = 0.0;     // sqrt(E (V_T - payoff)^2) under the physical measure
  double l2_se = 0.0;
};

/// Self-financing wealth simulation under the physical measure with the
/// regression hedge, started from the computed price.
ReplicationResult replication_test(const MarketModel& market, const Claim& claim, double t,
                                   const Segment& s, const SolverConfig& config);

struct BsFormula {
  double price = 0.0;
  double delta = 0.0;
};

/// Lognormal call value and delta; the no-memory reduction oracle.
BsFormula bs_closed_form(double s0, double strike, double sigma, double rho, double maturity);

/// Phi via a rational approximation accurate to well below 1e-7.
double normal_cdf(double x);

}  // namespace dfb
