#include "dfb/market.hpp"

#include <cmath>

#include "dfb/parallel.hpp"

namespace dfb {

MarketModel market_constant(const GridSpec& grid, double mu, double sigma, double rho,
                            Segment initial) {
  if (grid.dim_n != 1 || grid.dim_d != 1)
    throw ConfigError("market_constant: single-asset market needs dim_n == dim_d == 1");
  MarketModel m;
  m.drift_mu = [mu](double, const Segment&) { return mu; };
  m.vol_sigma = [sigma](double, const Segment&) { return sigma; };
  m.rate_rho = rho;
  m.sigma_floor = 0.5 * std::abs(sigma);
  m.initial_segment = std::move(initial);
  return m;
}

MarketModel market_delayed_vol(const GridSpec& grid, double mu, double base_vol, double amp,
                               double rho, Segment initial) {
  if (grid.dim_n != 1 || grid.dim_d != 1)
    throw ConfigError("market_delayed_vol: single-asset market needs dim_n == dim_d == 1");
  MarketModel m;
  m.drift_mu = [mu](double, const Segment&) { return mu; };
  m.vol_sigma = [base_vol, amp](double, const Segment& x) {
    const double lagged = x.values(0, 0);
    const double now = x.values(0, x.grid.past_points_m);
    return base_vol + amp * std::tanh(lagged / now - 1.0);
  };
  m.rate_rho = rho;
  m.sigma_floor = 0.5 * (base_vol - std::abs(amp));
  m.initial_segment = std::move(initial);
  return m;
}

namespace {

double vol_checked(const MarketModel& market, double t, const Segment& x) {
  const double sigma = market.vol_sigma(t, x);
  if (std::abs(sigma) < market.sigma_floor)
    throw ModelViolation("volatility " + std::to_string(sigma) + " below declared floor " +
                         std::to_string(market.sigma_floor));
  return sigma;
}

}  // namespace

double risk_premium(const MarketModel& market, double t, const Segment& x) {
  return (market.drift_mu(t, x) - market.rate_rho) / vol_checked(market, t, x);
}

PathEnsemble simulate_market(const MarketModel& market, PricingMeasure measure, double t,
                             const Segment& s, const NoiseGrid& noise, int threads) {
  const GridSpec& g = s.grid;
  if (g.dim_n != 1 || g.dim_d != 1)
    throw ConfigError("simulate_market: single-asset market needs dim_n == dim_d == 1");
  if ((s.values.array() <= 0.0).any())
    throw ConfigError("simulate_market: initial prices must be positive");
  if (std::abs(noise.dt() - g.step_h) > 1e-12 * std::max(1.0, g.step_h))
    throw ConfigError("simulate_market: noise step must equal the window step");

  const Index m = g.past_points_m;
  const Index steps = noise.num_steps();
  PathEnsemble ens;
  ens.grid = g;
  ens.t0 = t;
  ens.dt = noise.dt();
  ens.num_steps = steps;
  ens.num_paths = noise.num_paths();
  ens.y.resize(static_cast<std::size_t>(ens.num_paths));
  ens.dw.resize(static_cast<std::size_t>(ens.num_paths));

  parallel_for(ens.num_paths, threads, [&](Index p0, Index p1) {
    Segment window{g, Mat(1, m + 1)};
    for (Index p = p0; p < p1; ++p) {
      Mat& yp = ens.y[static_cast<std::size_t>(p)];
      yp.resize(1, m + steps + 1);
      yp.leftCols(m + 1) = s.values;
      Mat& wp = ens.dw[static_cast<std::size_t>(p)];
      wp.resize(1, steps);
      for (Index k = 0; k < steps; ++k) {
        const double tk = ens.time(k);
        window.values = yp.middleCols(k, m + 1);
        const double sigma = vol_checked(market, tk, window);
        const double drift = measure == PricingMeasure::RiskNeutral
                                 ? market.rate_rho
                                 : market.drift_mu(tk, window);
        const double dwk = noise.increment(p, k)[0];
        wp(0, k) = dwk;
        yp(0, m + k + 1) =
            yp(0, m + k) * std::exp((drift - 0.5 * sigma * sigma) * ens.dt + sigma * dwk);
        if (!std::isfinite(yp(0, m + k + 1)))
          throw SimulationError("simulate_market: non-finite price at path " + std::to_string(p) +
                                ", step " + std::to_string(k + 1));
      }
    }
  });
  return ens;
}

Claim claim_vanilla_call(double strike) { return {call_payoff(strike), "vanilla_call"}; }

Claim claim_smoothed_call(double strike, double beta) {
  return {smoothed_call_payoff(strike, beta), "smoothed_call"};
}

Claim claim_smoothed_window_average_call(const GridSpec& grid, double strike, double beta) {
  return {smoothed_window_average_call(grid, strike, beta), "window_average_call"};
}

Claim claim_fixed_lag_call(const GridSpec& grid, double strike, double beta) {
  return {smoothed_lag_call_payoff(-grid.delay_r, strike, beta), "fixed_lag_call"};
}

PriceResult price(const MarketModel& market, const Claim& claim, double t, const Segment& s,
                  const SolverConfig& config) {
  const GridSpec& g = s.grid;
  const Index steps = steps_between(t, config.horizon_T, g.step_h);
  const NoiseGrid noise(config.seed, config.num_paths, 1, g.step_h, steps);
  const PathEnsemble ens = simulate_market(market, PricingMeasure::RiskNeutral, t, s, noise,
                                           config.threads);

  PriceResult out;
  // Lags and window mean plus the claim payoff along a ray of scaled states;
  // for strike-type claims the ray acts as moneyness knots, which keeps the
  // near-expiry value and hedge surfaces inside the regression span.  The
  // quadratic products are dropped: hinge-like knots cover the curvature and,
  // unlike quadratics, stay linear where hedges extrapolate beyond the cloud.
  RegressionBasis basis = RegressionBasis::make_default(g);
  basis.include_products = false;
  const SegmentFunctional payoff = claim.payoff;
  for (double scale : {1.0, 0.8, 0.9, 0.95, 1.05, 1.1, 1.25}) {
    basis.extra.push_back([payoff, scale](const Segment& w) {
      Segment scaled = w;
      scaled.values *= scale;
      return functional_eval(payoff, scaled);
    });
  }
  out.solution = solve_backward(ens, discount_driver(market.rate_rho), claim.payoff, basis, config);
  out.price = out.solution.value_at_start;
  out.price_se = out.solution.value_std_error;

  Vec payoffs(ens.num_paths);
  parallel_for(ens.num_paths, config.threads, [&](Index p0, Index p1) {
    for (Index p = p0; p < p1; ++p)
      payoffs[p] = functional_eval(claim.payoff, ens.segment_at(p, steps));
  });
  const MeanSe stats = mean_se(payoffs, config.threads);
  const double discount = std::exp(-market.rate_rho * (config.horizon_T - t));
  out.discounted_mean = discount * stats.mean;
  out.discounted_mean_se = discount * stats.std_error;
  return out;
}

namespace {

/// Z coefficients averaged over a short time window.  The per-step
/// regressions carry independent zero-mean noise while the true Z surface
/// moves on the O(1) time scale, so the average trades an O(window * dt)
/// bias for a 1/window variance cut.  The start step stays as computed (its
/// plain centred average is already tight).
Vec smoothed_z_coefficients(const BsdeSolution& solution, Index k) {
  const Index last = solution.num_steps - 1;
  const Index kk = std::min(k, last);
  if (kk == 0) return solution.z_coeff[0].col(0);
  constexpr Index kHalfWindow = 7;
  const Index lo = std::max<Index>(1, kk - kHalfWindow);
  const Index hi = std::min(last, kk + kHalfWindow);
  Vec avg = Vec::Zero(solution.z_coeff[0].rows());
  for (Index j = lo; j <= hi; ++j) avg += solution.z_coeff[static_cast<std::size_t>(j)].col(0);
  return avg / static_cast<double>(hi - lo + 1);
}

}  // namespace

double hedge_strategy(const BsdeSolution& solution, const MarketModel& market, Index k,
                      const Segment& x) {
  const double sigma = vol_checked(market, solution.time(std::min(k, solution.num_steps - 1)), x);
  Vec f;
  solution.basis.features(x, f);
  return f.dot(smoothed_z_coefficients(solution, k)) / sigma;
}

ReplicationResult replication_test(const MarketModel& market, const Claim& claim, double t,
                                   const Segment& s, const SolverConfig& config) {
  const GridSpec& g = s.grid;
  const Index steps = steps_between(t, config.horizon_T, g.step_h);

  const PriceResult priced = price(market, claim, t, s, config);
  const BsdeSolution& sol = priced.solution;

  // Independent physical-measure paths for the hedging experiment.
  const NoiseGrid noise(config.seed ^ 0x9E3779B97F4A7C15ull, config.num_paths, 1, g.step_h, steps);
  const PathEnsemble ens =
      simulate_market(market, PricingMeasure::Physical, t, s, noise, config.threads);

  std::vector<Vec> z_coeffs(static_cast<std::size_t>(steps));
  for (Index k = 0; k < steps; ++k)
    z_coeffs[static_cast<std::size_t>(k)] = smoothed_z_coefficients(sol, k);

  Vec sq_gap(ens.num_paths);
  parallel_for(ens.num_paths, config.threads, [&](Index p0, Index p1) {
    Segment window{g, Mat(1, g.past_points_m + 1)};
    Vec f;
    for (Index p = p0; p < p1; ++p) {
      double wealth = priced.price;
      for (Index k = 0; k < steps; ++k) {
        const double tk = ens.time(k);
        window.values = ens.y[static_cast<std::size_t>(p)].middleCols(k, g.past_points_m + 1);
        const double sigma = vol_checked(market, tk, window);
        const double theta = (market.drift_mu(tk, window) - market.rate_rho) / sigma;
        sol.basis.features(window, f);
        const double pi = f.dot(z_coeffs[static_cast<std::size_t>(k)]) / sigma;
        wealth += (market.rate_rho * wealth + pi * sigma * theta) * ens.dt +
                  pi * sigma * ens.dw[static_cast<std::size_t>(p)](0, k);
      }
      const double payoff = functional_eval(claim.payoff, ens.segment_at(p, steps));
      sq_gap[p] = (wealth - payoff) * (wealth - payoff);
    }
  });

  ReplicationResult out;
  out.price = priced.price;
  out.price_se = priced.price_se;
  const MeanSe stats = mean_se(sq_gap, config.threads);
  out.l2_error = std::sqrt(stats.mean);
  out.l2_se = out.l2_error > 0 ? stats.std_error / (2.0 * out.l2_error) : 0.0;
  return out;
}

double normal_cdf(double x) {
  // Hart-style rational approximation of the Gaussian tail, double precision.
  const double ax = std::abs(x);
  double tail;
  if (ax > 37.0) {
    tail = 0.0;
  } else {
    const double e = std::exp(-0.5 * ax * ax);
    if (ax < 7.07106781186547) {
      double num = 3.52624965998911e-2 * ax + 0.700383064443688;
      num = num * ax + 6.37396220353165;
      num = num * ax + 33.912866078383;
      num = num * ax + 112.079291497871;
      num = num * ax + 221.213596169931;
      num = num * ax + 220.206867912376;
      double den = 8.83883476483184e-2 * ax + 1.75566716318264;
      den = den * ax + 16.064177579207;
      den = den * ax + 86.7807322029461;
      den = den * ax + 296.564248779674;
      den = den * ax + 637.333633378831;
      den = den * ax + 793.826512519948;
      den = den * ax + 440.413735824752;
      tail = e * num / den;
    } else {
      double b = ax + 0.65;
      b = ax + 4.0 / b;
      b = ax + 3.0 / b;
      b = ax + 2.0 / b;
      b = ax + 1.0 / b;
      tail = e / (b * 2.506628274631);
    }
  }
  return x > 0.0 ? 1.0 - tail : tail;
}

BsFormula bs_closed_form(double s0, double strike, double sigma, double rho, double maturity) {
  if (sigma <= 0.0 || maturity <= 0.0)
    throw ConfigError("bs_closed_form: sigma and maturity must be > 0");
  if (s0 <= 0.0) throw ConfigError("bs_closed_form: spot must be > 0");
  BsFormula out;
  if (strike <= 0.0) {
    out.price = s0;
    out.delta = 1.0;
    return out;
  }
  const double vol = sigma * std::sqrt(maturity);
  const double d1 = (std::log(s0 / strike) + (rho + 0.5 * sigma * sigma) * maturity) / vol;
  const double d2 = d1 - vol;
  out.price = s0 * normal_cdf(d1) - strike * std::exp(-rho * maturity) * normal_cdf(d2);
  out.delta = normal_cdf(d1);
  return out;
}

}  // namespace dfb
