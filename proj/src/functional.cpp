#include "dfb/functional.hpp"

#include <cmath>

namespace dfb {

namespace {

Vec stacked_evaluations(const Cylindrical& c, const Segment& x) {
  const Index n = x.grid.dim_n;
  Vec stacked(static_cast<Index>(c.thetas.size()) * n);
  for (std::size_t i = 0; i < c.thetas.size(); ++i)
    stacked.segment(static_cast<Index>(i) * n, n) = evaluate(x, c.thetas[i]);
  return stacked;
}

}  // namespace

double functional_eval(const SegmentFunctional& f, const Segment& x) {
  return std::visit(
      [&](const auto& kind) -> double {
        using T = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<T, Cylindrical>) {
          return kind.g(stacked_evaluations(kind, x));
        } else if constexpr (std::is_same_v<T, WindowIntegral>) {
          const GridSpec& g = x.grid;
          Mat g_nodes(1, g.past_points_m + 1);
          for (Index j = 0; j <= g.past_points_m; ++j)
            g_nodes(0, j) = kind.g(x.values.col(j));
          double acc = kind.mu.atom_at_zero[0] * g_nodes(0, g.past_points_m);
          for (const auto& [theta, mass] : kind.mu.interior_atoms)
            acc += mass[0] * kind.g(evaluate(x, theta));
          acc += g.step_h * kind.mu.density_weights.cwiseProduct(g_nodes).sum();
          return acc;
        } else {
          Vec parts(static_cast<Index>(kind.parts.size()));
          for (std::size_t i = 0; i < kind.parts.size(); ++i)
            parts[static_cast<Index>(i)] = functional_eval(kind.parts[i], x);
          return kind.outer(parts);
        }
      },
      f.kind());
}

WindowMeasure functional_gradient(const SegmentFunctional& f, const Segment& x) {
  return std::visit(
      [&](const auto& kind) -> WindowMeasure {
        using T = std::decay_t<decltype(kind)>;
        const Index n = x.grid.dim_n;
        if constexpr (std::is_same_v<T, Cylindrical>) {
          if (!kind.grad_g) throw ConfigError("functional_gradient: no declared gradient");
          const Vec dg = kind.grad_g(stacked_evaluations(kind, x));
          WindowMeasure out = zero_measure(x.grid, n);
          for (std::size_t i = 0; i < kind.thetas.size(); ++i) {
            const Vec block = dg.segment(static_cast<Index>(i) * n, n);
            accumulate(out, dirac_measure(x.grid, kind.thetas[i], block));
          }
          return out;
        } else if constexpr (std::is_same_v<T, WindowIntegral>) {
          if (!kind.grad_g) throw ConfigError("functional_gradient: no declared gradient");
          WindowMeasure out = zero_measure(x.grid, n);
          const GridSpec& g = x.grid;
          out.atom_at_zero = kind.mu.atom_at_zero[0] * kind.grad_g(x.values.col(g.past_points_m));
          for (const auto& [theta, mass] : kind.mu.interior_atoms)
            out.interior_atoms.emplace_back(theta, mass[0] * kind.grad_g(evaluate(x, theta)));
          for (Index j = 0; j <= g.past_points_m; ++j)
            out.density_weights.col(j) =
                kind.mu.density_weights(0, j) * kind.grad_g(x.values.col(j));
          return out;
        } else {
          if (!kind.grad_outer) throw ConfigError("functional_gradient: no declared gradient");
          Vec parts(static_cast<Index>(kind.parts.size()));
          for (std::size_t i = 0; i < kind.parts.size(); ++i)
            parts[static_cast<Index>(i)] = functional_eval(kind.parts[i], x);
          const Vec douter = kind.grad_outer(parts);
          WindowMeasure out = zero_measure(x.grid, n);
          for (std::size_t i = 0; i < kind.parts.size(); ++i) {
            if (douter[static_cast<Index>(i)] == 0.0) continue;
            accumulate(out, functional_gradient(kind.parts[i], x), douter[static_cast<Index>(i)]);
          }
          return out;
        }
      },
      f.kind());
}

SegmentFunctional lag_component(double theta, int component) {
  Cylindrical c;
  c.thetas = {theta};
  c.g = [component](const Vec& v) { return v[component]; };
  c.grad_g = [component](const Vec& v) {
    Vec g = Vec::Zero(v.size());
    g[component] = 1.0;
    return g;
  };
  return SegmentFunctional(std::move(c), 1.0, 0);
}

SegmentFunctional spot() { return lag_component(0.0, 0); }

SegmentFunctional spot_squared() {
  Cylindrical c;
  c.thetas = {0.0};
  c.g = [](const Vec& v) { return v[0] * v[0]; };
  c.grad_g = [](const Vec& v) {
    Vec g = Vec::Zero(v.size());
    g[0] = 2.0 * v[0];
    return g;
  };
  return SegmentFunctional(std::move(c), 1.0, 1);
}

SegmentFunctional window_mean(const GridSpec& grid) {
  WindowIntegral w;
  w.mu = scaled(lebesgue_measure(grid), 1.0 / grid.delay_r);
  w.g = [](const Vec& v) { return v[0]; };
  w.grad_g = [](const Vec& v) {
    Vec g = Vec::Zero(v.size());
    g[0] = 1.0;
    return g;
  };
  return SegmentFunctional(std::move(w), 1.0, 0);
}

SegmentFunctional product(SegmentFunctional a, SegmentFunctional b) {
  const double k = 2.0 * a.growth_constant() * b.growth_constant();
  const int m = a.growth_exponent() + b.growth_exponent() + 1;
  Composite c;
  c.outer = [](const Vec& p) { return p[0] * p[1]; };
  c.grad_outer = [](const Vec& p) { return Vec{{p[1], p[0]}}; };
  c.parts = {std::move(a), std::move(b)};
  return SegmentFunctional(std::move(c), k, m);
}

SegmentFunctional constant_functional(double value) {
  Cylindrical c;
  c.thetas = {0.0};
  c.g = [value](const Vec&) { return value; };
  c.grad_g = [](const Vec& v) { return Vec::Zero(v.size()).eval(); };
  return SegmentFunctional(std::move(c), std::abs(value) + 1.0, 0);
}

SegmentFunctional call_payoff(double strike) {
  Cylindrical c;
  c.thetas = {0.0};
  c.g = [strike](const Vec& v) { return std::max(v[0] - strike, 0.0); };
  c.grad_g = [strike](const Vec& v) {
    Vec g = Vec::Zero(v.size());
    g[0] = v[0] > strike ? 1.0 : 0.0;
    return g;
  };
  return SegmentFunctional(std::move(c), strike + 1.0, 0);
}

double softplus(double z, double beta) {
  const double t = beta * z;
  return (std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)))) / beta;
}

double softplus_derivative(double z, double beta) {
  const double t = beta * z;
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

namespace {

SegmentFunctional smoothed_call_at(double theta, double strike, double beta) {
  Cylindrical c;
  c.thetas = {theta};
  c.g = [strike, beta](const Vec& v) { return softplus(v[0] - strike, beta); };
  c.grad_g = [strike, beta](const Vec& v) {
    Vec g = Vec::Zero(v.size());
    g[0] = softplus_derivative(v[0] - strike, beta);
    return g;
  };
  return SegmentFunctional(std::move(c), strike + 1.0, 0);
}

}  // namespace

SegmentFunctional smoothed_call_payoff(double strike, double beta) {
  return smoothed_call_at(0.0, strike, beta);
}

SegmentFunctional smoothed_lag_call_payoff(double lag_theta, double strike, double beta) {
  return smoothed_call_at(lag_theta, strike, beta);
}

SegmentFunctional smoothed_window_average_call(const GridSpec& grid, double strike, double beta) {
  Composite c;
  c.outer = [strike, beta](const Vec& p) { return softplus(p[0] - strike, beta); };
  c.grad_outer = [strike, beta](const Vec& p) {
    return Vec{{softplus_derivative(p[0] - strike, beta)}};
  };
  c.parts = {window_mean(grid)};
  return SegmentFunctional(std::move(c), strike + 1.0, 0);
}

}  // namespace dfb
