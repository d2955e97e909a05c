#include "dfb/control.hpp"

#include <cmath>
#include <cstdio>

#include "dfb/parallel.hpp"

namespace dfb {

bool ControlSet::contains(const Vec& u, double tol) const {
  if (u.size() != dim) return false;
  switch (kind) {
    case Kind::Box:
      return (u.array() >= lo.array() - tol).all() && (u.array() <= hi.array() + tol).all();
    case Kind::Ball:
      return u.norm() <= radius + tol;
    case Kind::Finite:
      for (const Vec& p : points)
        if ((p - u).lpNorm<Eigen::Infinity>() <= tol) return true;
      return false;
  }
  return false;
}

ControlSet box_set(Vec lo, Vec hi) {
  if (lo.size() != hi.size() || lo.size() < 1 || (lo.array() > hi.array()).any())
    throw ConfigError("box_set: bounds must satisfy lo <= hi componentwise");
  ControlSet s;
  s.kind = ControlSet::Kind::Box;
  s.dim = lo.size();
  s.lo = std::move(lo);
  s.hi = std::move(hi);
  return s;
}

ControlSet ball_set(double radius, Index dim) {
  if (radius <= 0.0 || dim < 1) throw ConfigError("ball_set: radius and dim must be positive");
  ControlSet s;
  s.kind = ControlSet::Kind::Ball;
  s.dim = dim;
  s.radius = radius;
  return s;
}

ControlSet finite_set(std::vector<Vec> points) {
  if (points.empty()) throw ConfigError("finite_set: needs at least one point");
  ControlSet s;
  s.kind = ControlSet::Kind::Finite;
  s.dim = points.front().size();
  s.points = std::move(points);
  return s;
}

namespace {

bool lex_less(const Vec& a, const Vec& b) {
  for (Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

/// Lexicographic enumeration of the search grid; the first strict minimum is
/// the lexicographically smallest minimizer.
template <typename Fn>
void for_each_candidate(const ControlSet& U, int resolution, Fn&& visit) {
  switch (U.kind) {
    case ControlSet::Kind::Finite:
      for (const Vec& p : U.points) visit(p);
      return;
    case ControlSet::Kind::Box:
    case ControlSet::Kind::Ball: {
      if (U.dim > 3)
        throw ConfigError("minimizer: grid search supports control dimension <= 3");
      const Vec lo = U.kind == ControlSet::Kind::Box ? U.lo : Vec::Constant(U.dim, -U.radius);
      const Vec hi = U.kind == ControlSet::Kind::Box ? U.hi : Vec::Constant(U.dim, U.radius);
      std::vector<Index> idx(static_cast<std::size_t>(U.dim), 0);
      Vec u(U.dim);
      const Index last = resolution - 1;
      while (true) {
        for (Index i = 0; i < U.dim; ++i) {
          const double w = last == 0 ? 0.0
                                     : static_cast<double>(idx[static_cast<std::size_t>(i)]) /
                                           static_cast<double>(last);
          u[i] = lo[i] + w * (hi[i] - lo[i]);
        }
        if (U.kind != ControlSet::Kind::Ball || u.norm() <= U.radius + 1e-12) visit(u);
        Index carry = U.dim - 1;
        while (carry >= 0 && ++idx[static_cast<std::size_t>(carry)] > last) {
          idx[static_cast<std::size_t>(carry)] = 0;
          --carry;
        }
        if (carry < 0) break;
      }
      return;
    }
  }
}

}  // namespace

ControlProblem quadratic_ball_problem(double radius, Index dim, SegmentFunctional terminal) {
  ControlProblem p;
  p.U = ball_set(radius, dim);
  p.running_cost = [](const Vec& u) { return 0.5 * u.squaredNorm(); };
  p.channel = [](double, const Segment&, const Vec& u) { return u; };
  p.channel_bound = radius;
  p.terminal = std::move(terminal);
  p.analytic_minimizer = [radius](double, const Segment&, const Vec& z) {
    const double norm = z.norm();
    if (norm <= radius) return (-z).eval();
    return (-(radius / norm) * z).eval();
  };
  return p;
}

double hamiltonian(const ControlProblem& problem, double t, const Segment& x, const Vec& z,
                   const MinimizerRule& rule) {
  if (rule.prefer_analytic && problem.analytic_minimizer) {
    const Vec u = problem.analytic_minimizer(t, x, z);
    return problem.running_cost(u) + z.dot(problem.channel(t, x, u));
  }
  double best = std::numeric_limits<double>::infinity();
  for_each_candidate(problem.U, rule.grid_resolution, [&](const Vec& u) {
    best = std::min(best, problem.running_cost(u) + z.dot(problem.channel(t, x, u)));
  });
  return best;
}

Vec minimizer(const ControlProblem& problem, double t, const Segment& x, const Vec& z,
              const MinimizerRule& rule) {
  if (rule.prefer_analytic && problem.analytic_minimizer) return problem.analytic_minimizer(t, x, z);
  double best = std::numeric_limits<double>::infinity();
  Vec best_u;
  for_each_candidate(problem.U, rule.grid_resolution, [&](const Vec& u) {
    const double value = problem.running_cost(u) + z.dot(problem.channel(t, x, u));
    if (value < best || (value == best && (best_u.size() == 0 || lex_less(u, best_u)))) {
      best = value;
      best_u = u;
    }
  });
  return best_u;
}

Driver hamiltonian_driver(const ControlProblem& problem, const MinimizerRule& rule) {
  // The backward step subtracts the driver charge (Y_k = E[Y_{k+1}] - psi dt),
  // so the control value function needs the negated hamiltonian: with it,
  // v = E[terminal] + integral of inf_u(g + z h), the cost of the best policy.
  Driver d;
  d.psi = [problem, rule](double t, const Segment& x, double, const Vec& z) {
    return -hamiltonian(problem, t, x, z, rule);
  };
  d.lipschitz_z = problem.channel_bound;
  return d;
}

namespace {

Vec pathwise_costs(const ControlProblem& problem, const PathEnsemble& ens, int threads) {
  Vec costs(ens.num_paths);
  parallel_for(ens.num_paths, threads, [&](Index p0, Index p1) {
    for (Index p = p0; p < p1; ++p) {
      double run = 0.0;
      for (Index k = 0; k < ens.num_steps; ++k)
        run += problem.running_cost((*ens.controls)[static_cast<std::size_t>(p)].col(k));
      costs[p] = run * ens.dt + functional_eval(problem.terminal, ens.segment_at(p, ens.num_steps));
    }
  });
  return costs;
}

}  // namespace

MeanSe cost(const ControlProblem& problem, const CoefficientModel& model, double t,
            const Segment& x, const Policy& policy, const NoiseGrid& noise, int threads) {
  const double bound = problem.channel_bound;
  ChannelFn checked = [&problem, bound](double s, const Segment& w, const Vec& u) {
    Vec h = problem.channel(s, w, u);
    if (h.norm() > bound + 1e-9)
      throw ConfigError("cost: channel exceeded its declared bound");
    return h;
  };
  const PathEnsemble ens = simulate_controlled(model, checked, policy, t, x, noise, threads);
  return mean_se(pathwise_costs(problem, ens, threads), threads);
}

MeanSe cost_reweighted(const ControlProblem& problem, const CoefficientModel& model, double t,
                       const Segment& x, const Policy& policy, const NoiseGrid& noise,
                       int threads) {
  const PathEnsemble ens = simulate_forward(model, t, x, noise, threads);
  // exp(+ sum h.dW - 1/2 sum |h|^2 dt) reweights the driverless paths into the
  // law with drift b + sigma h; realised by negating the channel.
  ChannelFn negated = [&problem](double s, const Segment& w, const Vec& u) {
    return (-problem.channel(s, w, u)).eval();
  };
  Vec weighted(ens.num_paths);
  parallel_for(ens.num_paths, threads, [&](Index p0, Index p1) {
    for (Index p = p0; p < p1; ++p) {
      double run = 0.0;
      for (Index k = 0; k < ens.num_steps; ++k)
        run += problem.running_cost(policy.at(p, k, ens.time(k), ens.segment_at(p, k)));
      const double payoff =
          run * ens.dt + functional_eval(problem.terminal, ens.segment_at(p, ens.num_steps));
      weighted[p] = girsanov_weight(ens, p, negated, policy) * payoff;
    }
  });
  return mean_se(weighted, threads);
}

FeedbackRun simulate_feedback(const ControlProblem& problem, const CoefficientModel& model,
                              const MinimizerRule& rule, const BsdeSolution& solution, double t,
                              const Segment& x, const NoiseGrid& noise, int threads) {
  const double t0 = solution.t0;
  const double dt = solution.dt;
  const Index last = solution.num_steps - 1;
  const Policy feedback = Policy::feedback(
      [&](double s, const Segment& w) {
        auto k = static_cast<Index>(std::llround((s - t0) / dt));
        k = std::clamp<Index>(k, 0, last);
        return minimizer(problem, s, w, solution.z_surrogate(k, w), rule);
      },
      "feedback");
  FeedbackRun run;
  run.ensemble = simulate_controlled(model, problem.channel, feedback, t, x, noise, threads);
  const MeanSe j = mean_se(pathwise_costs(problem, run.ensemble, threads), threads);
  run.cost = j.mean;
  run.cost_se = j.std_error;
  return run;
}

std::vector<Policy> make_tournament_policies(const ControlSet& U, int num_constant,
                                             int num_piecewise, double t, double horizon,
                                             std::uint64_t seed) {
  auto draw_uniform = [seed](std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    const auto out = philox4x32({a, b, c, 0x706f6c69u},
                                {static_cast<std::uint32_t>(seed),
                                 static_cast<std::uint32_t>(seed >> 32)});
    return uniform_from_bits(out[0], out[1]);
  };
  auto draw_point = [&](std::uint32_t tag, std::uint32_t piece) {
    Vec u(U.dim);
    switch (U.kind) {
      case ControlSet::Kind::Box:
        for (Index i = 0; i < U.dim; ++i)
          u[i] = U.lo[i] + (U.hi[i] - U.lo[i]) *
                               draw_uniform(tag, piece, static_cast<std::uint32_t>(i));
        return u;
      case ControlSet::Kind::Ball: {
        // Direction from Gaussian draws, radius from a uniform scaled to the ball.
        double norm2 = 0.0;
        for (Index i = 0; i < U.dim; i += 2) {
          const auto z = gaussian_pair(seed, 1, tag, piece, static_cast<std::uint32_t>(i));
          u[i] = z[0];
          if (i + 1 < U.dim) u[i + 1] = z[1];
        }
        norm2 = u.squaredNorm();
        const double scale =
            U.radius *
            std::pow(draw_uniform(tag, piece, 0xffu), 1.0 / static_cast<double>(U.dim));
        return norm2 > 0 ? (u * (scale / std::sqrt(norm2))).eval() : Vec::Zero(U.dim).eval();
      }
      case ControlSet::Kind::Finite: {
        const auto idx = static_cast<std::size_t>(draw_uniform(tag, piece, 0) *
                                                  static_cast<double>(U.points.size()));
        return U.points[std::min(idx, U.points.size() - 1)];
      }
    }
    return u;
  };

  std::vector<Policy> out;
  for (int i = 0; i < num_constant; ++i)
    out.push_back(Policy::constant(draw_point(static_cast<std::uint32_t>(i), 0),
                                   "const_" + std::to_string(i)));
  const int pieces = 4;
  for (int i = 0; i < num_piecewise; ++i) {
    std::vector<Vec> values;
    for (int q = 0; q < pieces; ++q)
      values.push_back(draw_point(1000u + static_cast<std::uint32_t>(i),
                                  static_cast<std::uint32_t>(q)));
    const double span = (horizon - t) / pieces;
    out.push_back(Policy::feedback(
        [values, t, span, pieces](double s, const Segment&) {
          auto q = static_cast<int>((s - t) / span);
          return values[static_cast<std::size_t>(std::clamp(q, 0, pieces - 1))];
        },
        "piecewise_" + std::to_string(i)));
  }
  return out;
}

FundamentalReport fundamental_relation_check(const ControlProblem& problem,
                                             const CoefficientModel& model,
                                             const MinimizerRule& rule, double t, const Segment& x,
                                             const std::vector<Policy>& policies,
                                             const SolverConfig& config) {
  const GridSpec& g = x.grid;
  const Index steps = steps_between(t, config.horizon_T, g.step_h);
  const NoiseGrid noise(config.seed, config.num_paths, g.dim_d, g.step_h, steps);

  const PathEnsemble ens = simulate_forward(model, t, x, noise, config.threads);
  const Driver driver = hamiltonian_driver(problem, rule);
  const BsdeSolution sol =
      solve_backward(ens, driver, problem.terminal, RegressionBasis::make_default(g), config);

  FundamentalReport report;
  report.value = sol.value_at_start;
  report.value_se = sol.value_std_error;

  // Common noise across policies to cut comparison variance.
  for (const Policy& policy : policies) {
    const MeanSe j = cost(problem, model, t, x, policy, noise, config.threads);
    PolicyRow row;
    row.id = policy.id();
    row.cost = j.mean;
    row.se = j.std_error;
    row.gap = j.mean - report.value;
    row.violation = row.gap < -5.0 * combined_se(j.std_error, report.value_se);
    report.rows.push_back(row);
  }

  const FeedbackRun fb = simulate_feedback(problem, model, rule, sol, t, x, noise, config.threads);
  report.feedback.id = "feedback";
  report.feedback.cost = fb.cost;
  report.feedback.se = fb.cost_se;
  report.feedback.gap = fb.cost - report.value;
  report.feedback.violation =
      report.feedback.gap < -5.0 * combined_se(fb.cost_se, report.value_se);

  report.min_gap = report.feedback.gap;
  report.any_violation = report.feedback.violation;
  for (const auto& row : report.rows) {
    report.min_gap = std::min(report.min_gap, row.gap);
    report.any_violation = report.any_violation || row.violation;
  }
  return report;
}

SegmentFunctional reduce_running_cost(std::function<double(const Vec&)> ell,
                                      std::function<Vec(const Vec&)> ell_grad, double t, double T,
                                      const GridSpec& grid) {
  const double span = T - t;
  if (span < -1e-12) throw ConfigError("reduce_running_cost: needs T >= t");
  if (span > grid.delay_r + 1e-9 * grid.step_h)
    throw ConfigError(
        "reduce_running_cost: window too short; extend the delay so that r >= T - t");
  const double raw = span / grid.step_h;
  const auto width = static_cast<Index>(std::llround(raw));
  if (std::abs(raw - static_cast<double>(width)) > 1e-9)
    throw ConfigError("reduce_running_cost: T - t must sit on the window grid");

  WindowIntegral w;
  w.mu = zero_measure(grid, 1);
  const Index j_lo = grid.past_points_m - width;
  if (width > 0) {
    for (Index j = j_lo; j <= grid.past_points_m; ++j) w.mu.density_weights(0, j) = 1.0;
    w.mu.density_weights(0, j_lo) = 0.5;
    w.mu.density_weights(0, grid.past_points_m) = 0.5;
  }
  w.g = std::move(ell);
  w.grad_g = std::move(ell_grad);
  return SegmentFunctional(std::move(w), 1.0 + span, 1);
}

void write_tournament_csv(const FundamentalReport& report, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("write_tournament_csv: cannot open " + path);
  std::fprintf(f, "policy,J,se,gap,violation\n");
  for (const auto& row : report.rows)
    std::fprintf(f, "%s,%.17g,%.17g,%.17g,%d\n", row.id.c_str(), row.cost, row.se, row.gap,
                 row.violation ? 1 : 0);
  std::fprintf(f, "%s,%.17g,%.17g,%.17g,%d\n", report.feedback.id.c_str(), report.feedback.cost,
               report.feedback.se, report.feedback.gap, report.feedback.violation ? 1 : 0);
  std::fclose(f);
}

}  // namespace dfb
