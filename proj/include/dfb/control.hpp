#pragma once

#include "dfb/bsde.hpp"

namespace dfb {

/// Admissible control values: a box, a centred ball, or a finite list.
struct ControlSet {
  enum class Kind { Box, Ball, Finite };
  Kind kind = Kind::Box;
  Vec lo, hi;              // box bounds
  double radius = 0.0;     // ball radius
  Index dim = 1;
  std::vector<Vec> points; // finite set

  bool contains(const Vec& u, double tol = 1e-12) const;
};

ControlSet box_set(Vec lo, Vec hi);
ControlSet ball_set(double radius, Index dim);
ControlSet finite_set(std::vector<Vec> points);

struct ControlProblem {
  ControlSet U;
  std::function<double(const Vec&)> running_cost;  // g >= 0
  ChannelFn channel;                               // h(t, x, u) in R^d
  double channel_bound = 1.0;
  SegmentFunctional terminal;
  /// Optional closed-form arg-min of g(u) + z . h(t, x, u); grid search is
  /// the fallback selection.
  std::function<Vec(double, const Segment&, const Vec&)> analytic_minimizer;
};

/// Ball control set with g(u) = |u|^2 / 2 and h = u; the minimizer is
/// -z clipped to the ball.
ControlProblem quadratic_ball_problem(double radius, Index dim, SegmentFunctional terminal);

struct MinimizerRule {
  bool prefer_analytic = true;
  int grid_resolution = 101;  // points per dimension; ties break lexicographically
};

/// inf over U of g(u) + z . h(t, x, u).
double hamiltonian(const ControlProblem& problem, double t, const Segment& x, const Vec& z,
                   const MinimizerRule& rule = MinimizerRule{});

/// A control value attaining the hamiltonian within grid tolerance;
/// deterministic under the lexicographic tie-break.
Vec minimizer(const ControlProblem& problem, double t, const Segment& x, const Vec& z,
              const MinimizerRule& rule = MinimizerRule{});

/// The hamiltonian as a backward-equation driver.
Driver hamiltonian_driver(const ControlProblem& problem, const MinimizerRule& rule = MinimizerRule{});

/// Monte Carlo cost of a policy under the controlled dynamics,
/// E[ sum_k g(u_k) dt + terminal(X_T) ].
MeanSe cost(const ControlProblem& problem, const CoefficientModel& model, double t,
            const Segment& x, const Policy& policy, const NoiseGrid& noise, int threads = 1);

/// Same expectation evaluated on uncontrolled paths reweighted by the change
/// of measure that installs the control drift; a cross-check of `cost`.
MeanSe cost_reweighted(const ControlProblem& problem, const CoefficientModel& model, double t,
                       const Segment& x, const Policy& policy, const NoiseGrid& noise,
                       int threads = 1);

struct FeedbackRun {
  PathEnsemble ensemble;
  double cost = 0.0;
  double cost_se = 0.0;
};

/// Closed-loop simulation with u_k = minimizer(t_k, X_k, Z(t_k, X_k)), Z read
/// from the regression coefficients of a hamiltonian-driver solution, so the
/// law is a function of the live state, not of stored paths.
FeedbackRun simulate_feedback(const ControlProblem& problem, const CoefficientModel& model,
                              const MinimizerRule& rule, const BsdeSolution& solution, double t,
                              const Segment& x, const NoiseGrid& noise, int threads = 1);

struct PolicyRow {
  std::string id;
  double cost = 0.0;
  double se = 0.0;
  double gap = 0.0;  // J - v
  bool violation = false;
};

struct FundamentalReport {
  double value = 0.0;     // v(t, x) from the hamiltonian-driver solve
  double value_se = 0.0;
  std::vector<PolicyRow> rows;
  PolicyRow feedback;
  double min_gap = 0.0;
  bool any_violation = false;
};

/// Policy tournament against the value function: flags J - v < -5 SE.
FundamentalReport fundamental_relation_check(const ControlProblem& problem,
                                             const CoefficientModel& model,
                                             const MinimizerRule& rule, double t, const Segment& x,
                                             const std::vector<Policy>& policies,
                                             const SolverConfig& config);

/// Random constant and piecewise-constant policies drawn from U.
std::vector<Policy> make_tournament_policies(const ControlSet& U, int num_constant,
                                             int num_piecewise, double t, double horizon,
                                             std::uint64_t seed);

/// Terminal functional equal to the integral of ell(y_s) ds over [t, T],
/// realised as a window integral; needs r >= T - t.
SegmentFunctional reduce_running_cost(std::function<double(const Vec&)> ell,
                                      std::function<Vec(const Vec&)> ell_grad, double t, double T,
                                      const GridSpec& grid);

void write_tournament_csv(const FundamentalReport& report, const std::string& path);

}  // namespace dfb
