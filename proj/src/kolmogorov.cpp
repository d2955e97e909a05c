#include "dfb/kolmogorov.hpp"

#include "dfb/parallel.hpp"

namespace dfb {

MildResidualReport mild_residual(const CoefficientModel& model, const Driver& driver,
                                 const SegmentFunctional& terminal, double t, const Segment& x,
                                 const MildResidualConfig& config) {
  const GridSpec& g = x.grid;
  const SolverConfig& sc = config.solver;
  const Index steps = steps_between(t, sc.horizon_T, g.step_h);

  MildResidualReport report;
  if (steps == 0) {
    report.value = functional_eval(terminal, x);
    report.rhs = report.value;
    return report;
  }

  const NoiseGrid noise(sc.seed, sc.num_paths, g.dim_d, g.step_h, steps);
  const PathEnsemble ens = simulate_forward(model, t, x, noise, sc.threads);
  const BsdeSolution sol =
      solve_backward(ens, driver, terminal, RegressionBasis::make_default(g), sc);
  report.value = sol.value_at_start;

  // Coarse quadrature nodes over [t, T], endpoints always included.
  std::vector<Index> nodes;
  for (Index k = 0; k < steps; k += config.quad_stride) nodes.push_back(k);
  nodes.push_back(steps);
  std::vector<double> weight(nodes.size(), 0.0);
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    const double left = q == 0 ? ens.time(nodes[0]) : ens.time(nodes[q - 1]);
    const double right = q + 1 == nodes.size() ? ens.time(nodes.back()) : ens.time(nodes[q + 1]);
    weight[q] = 0.5 * (right - left);
  }

  const PathEnsemble* eval_ens = &ens;
  PathEnsemble audit;
  if (config.nested_audit) {
    const NoiseGrid audit_noise(sc.seed + 1, config.audit_paths, g.dim_d, g.step_h, steps);
    audit = simulate_forward(model, t, x, audit_noise, sc.threads);
    eval_ens = &audit;
  }
  const bool reuse_paths = !config.nested_audit;

  Vec per_path(eval_ens->num_paths);
  parallel_for(eval_ens->num_paths, sc.threads, [&](Index p0, Index p1) {
    for (Index p = p0; p < p1; ++p) {
      double integral = 0.0;
      for (std::size_t q = 0; q < nodes.size(); ++q) {
        const Index k = nodes[q];
        const double tk = eval_ens->time(k);
        const Segment window = eval_ens->segment_at(p, k);
        double v_k;
        Vec z_k;
        if (k == steps) {
          v_k = functional_eval(terminal, window);
          z_k = sol.z_surrogate(steps - 1, window);
        } else if (reuse_paths) {
          v_k = sol.y_paths(p, k);
          z_k = sol.z_paths[static_cast<std::size_t>(k)].row(p).transpose();
        } else {
          v_k = value_surrogate(sol, driver, k, window, sc.implicit_iterations);
          z_k = sol.z_surrogate(k, window);
        }
        integral += weight[q] * driver.psi(tk, window, v_k, z_k);
      }
      per_path[p] = functional_eval(terminal, eval_ens->segment_at(p, steps)) - integral;
    }
  });

  const MeanSe rhs = mean_se(per_path, sc.threads);
  report.rhs = rhs.mean;
  report.residual = rhs.mean - report.value;
  report.std_error = combined_se(rhs.std_error, sol.value_std_error);
  return report;
}

}  // namespace dfb
