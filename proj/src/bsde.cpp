#include "dfb/bsde.hpp"

#include <cmath>
#include <cstdio>

#include "dfb/parallel.hpp"

namespace dfb {

Driver zero_driver() {
  Driver d;
  d.psi = [](double, const Segment&, double, const Vec&) { return 0.0; };
  return d;
}

Driver discount_driver(double rho) {
  Driver d;
  d.psi = [rho](double, const Segment&, double y, const Vec&) { return rho * y; };
  d.lipschitz_y = std::abs(rho);
  return d;
}

double BsdeSolution::y_surrogate(Index k, const Segment& x) const {
  Vec f;
  basis.features(x, f);
  return f.dot(y_coeff.col(k));
}

Vec BsdeSolution::z_surrogate(Index k, const Segment& x) const {
  Vec f;
  basis.features(x, f);
  return z_coeff[static_cast<std::size_t>(k)].transpose() * f;
}

namespace {

struct StepAccum {
  Mat gram;     // p x p
  Mat moments;  // p x (1 + d)
  Vec max_abs;  // per-feature max |f|, for the effective-support check
  double sum_sq = 0.0;

  StepAccum() = default;
  StepAccum(Index p, Index d)
      : gram(Mat::Zero(p, p)), moments(Mat::Zero(p, 1 + d)), max_abs(Vec::Zero(p)) {}
  StepAccum& operator+=(const StepAccum& o) {
    gram += o.gram;
    moments += o.moments;
    max_abs = max_abs.cwiseMax(o.max_abs);
    sum_sq += o.sum_sq;
    return *this;
  }
};

double driver_step(const Driver& driver, double t, const Segment& x, double yhat, const Vec& z,
                   double dt, int implicit_iterations) {
  double y = yhat - driver.psi(t, x, yhat, z) * dt;
  for (int it = 0; it < implicit_iterations; ++it) y = yhat - driver.psi(t, x, y, z) * dt;
  return y;
}

}  // namespace

BsdeSolution solve_backward(const PathEnsemble& ens, const Driver& driver,
                            const SegmentFunctional& terminal, const RegressionBasis& basis,
                            const SolverConfig& config) {
  const GridSpec& g = ens.grid;
  const Index n_paths = ens.num_paths;
  const Index steps = ens.num_steps;
  const Index p = basis.size(g);
  const Index d = g.dim_d;
  const int threads = config.threads;

  BsdeSolution sol;
  sol.grid = g;
  sol.t0 = ens.t0;
  sol.dt = ens.dt;
  sol.num_steps = steps;
  sol.num_paths = n_paths;
  sol.basis = basis;
  sol.y_coeff = Mat::Zero(p, std::max<Index>(steps, 1));
  sol.z_coeff.assign(static_cast<std::size_t>(std::max<Index>(steps, 1)), Mat::Zero(p, d));
  sol.y_paths.resize(n_paths, steps + 1);
  sol.z_paths.assign(static_cast<std::size_t>(steps), Mat());
  sol.r2_y = Vec::Zero(std::max<Index>(steps, 1));

  // Terminal condition, exact on every path.
  parallel_for(n_paths, threads, [&](Index p0, Index p1) {
    for (Index q = p0; q < p1; ++q)
      sol.y_paths(q, steps) = functional_eval(terminal, ens.segment_at(q, steps));
  });

  if (steps == 0) {
    sol.value_at_start = sol.y_paths(0, 0);
    sol.value_std_error = 0.0;
    return sol;
  }

  // Per-path contributions that telescope to the start value: terminal value
  // minus the accumulated driver charges.  The bootstrap resamples these, so
  // the reported error carries the full terminal spread.
  Vec contrib = sol.y_paths.col(steps);

  Mat features(n_paths, p);

  for (Index k = steps - 1; k >= 0; --k) {
    const double tk = ens.time(k);
    parallel_for(n_paths, threads, [&](Index p0, Index p1) {
      Vec f(p);
      for (Index q = p0; q < p1; ++q) {
        basis.features(ens.segment_at(q, k), f);
        features.row(q) = f.transpose();
      }
    });

    const double inv_dt = 1.0 / ens.dt;
    const StepAccum acc =
        blocked_sum<StepAccum>(n_paths, threads, StepAccum(p, d), [&](Index q) {
          StepAccum one(p, d);
          const double y_next = sol.y_paths(q, k + 1);
          const Vec f = features.row(q).transpose();
          one.gram = f * f.transpose();
          one.moments.col(0) = f * y_next;
          one.max_abs = f.cwiseAbs();
          one.sum_sq = y_next * y_next;
          return one;
        });

    Mat beta(p, 1 + d);
    double sse = 0.0;
    if (k == 0) {
      // The start state is deterministic: plain Monte Carlo averages, kept in
      // the intercept slot so surrogate evaluation stays uniform in k.  The
      // Z average is centred (a regression intercept would absorb the mean),
      // which removes the dominant mean * dW / dt noise term.
      beta.setZero();
      const double mean_y = acc.moments(0, 0) / static_cast<double>(n_paths);
      beta(0, 0) = mean_y;
      const Vec zsum = blocked_sum<Vec>(n_paths, threads, Vec::Zero(d).eval(), [&](Index q) {
        return ((sol.y_paths(q, 1) - mean_y) * inv_dt *
                ens.dw[static_cast<std::size_t>(q)].col(0))
            .eval();
      });
      beta.col(0).tail(p - 1).setZero();
      beta.row(0).tail(d) = (zsum / static_cast<double>(n_paths)).transpose();
      sse = blocked_sum<double>(n_paths, threads, 0.0, [&](Index q) {
        const double res = sol.y_paths(q, 1) - mean_y;
        return res * res;
      });
    } else {
      // Normal equations on the standardised Gram: the ridge then acts on a
      // unit diagonal and is invariant to feature scaling.  Columns that are
      // negligible against the dominant one, or whose Gram mass rests on a
      // handful of paths (effective support below ~30), are dead at this
      // step; their coefficients are pinned to zero rather than noise-fit and
      // amplified by the scaling.
      const Vec scale = acc.gram.diagonal().cwiseMax(0.0).cwiseSqrt();
      const double scale_floor = 1e-12 * scale.maxCoeff() + 1e-300;
      const Vec support =
          acc.gram.diagonal().cwiseQuotient(acc.max_abs.cwiseAbs2().cwiseMax(1e-300));
      Vec inv_scale(p);
      for (Index i = 0; i < p; ++i)
        inv_scale[i] =
            (scale[i] > scale_floor && support[i] >= 30.0) ? 1.0 / scale[i] : 0.0;
      Mat gram = inv_scale.asDiagonal() * acc.gram * inv_scale.asDiagonal();
      gram.diagonal().array() += basis.ridge_factor;
      const Eigen::LDLT<Mat> ldlt(gram);
      if (ldlt.info() != Eigen::Success)
        throw SimulationError("solve_backward: regression failed at step " + std::to_string(k) +
                              " (p = " + std::to_string(p) +
                              ", trace = " + std::to_string(acc.gram.trace()) + ")");
      beta.col(0) =
          inv_scale.asDiagonal() * ldlt.solve((inv_scale.asDiagonal() * acc.moments.col(0)).eval());

      // Second pass: Z targets centred by the fitted conditional mean, which
      // leaves the expectation unchanged and strips the O(|Y|/sqrt(dt)) noise.
      struct ZAccum {
        Mat moments;
        double sse = 0.0;
        ZAccum() = default;
        explicit ZAccum(Index pp, Index dd) : moments(Mat::Zero(pp, dd)) {}
        ZAccum& operator+=(const ZAccum& o) {
          moments += o.moments;
          sse += o.sse;
          return *this;
        }
      };
      const Vec beta_y = beta.col(0);
      const ZAccum zacc = blocked_sum<ZAccum>(n_paths, threads, ZAccum(p, d), [&](Index q) {
        ZAccum one(p, d);
        const Vec f = features.row(q).transpose();
        const double res = sol.y_paths(q, k + 1) - f.dot(beta_y);
        for (Index j = 0; j < d; ++j)
          one.moments.col(j) = f * (res * ens.dw[static_cast<std::size_t>(q)](j, k) * inv_dt);
        one.sse = res * res;
        return one;
      });
      for (Index j = 0; j < d; ++j)
        beta.col(1 + j) = inv_scale.asDiagonal() *
                          ldlt.solve((inv_scale.asDiagonal() * zacc.moments.col(j)).eval());
      sse = zacc.sse;
      if (!beta.allFinite())
        throw SimulationError("solve_backward: non-finite coefficients at step " +
                              std::to_string(k) + "; inspect feature scaling");
    }

    sol.y_coeff.col(k) = beta.col(0);
    sol.z_coeff[static_cast<std::size_t>(k)] = beta.rightCols(d);
    Mat& zk = sol.z_paths[static_cast<std::size_t>(k)];
    zk.resize(n_paths, d);

    const double mean_y = acc.moments(0, 0) / static_cast<double>(n_paths);
    const double sst = acc.sum_sq - static_cast<double>(n_paths) * mean_y * mean_y;
    sol.r2_y[k] = sst > 1e-300 ? 1.0 - sse / sst : 1.0;

    parallel_for(n_paths, threads, [&](Index p0, Index p1) {
      for (Index q = p0; q < p1; ++q) {
        const double yhat = features.row(q).dot(beta.col(0));
        const Vec z = (features.row(q) * beta.rightCols(d)).transpose();
        zk.row(q) = z.transpose();
        const double y_new = driver_step(driver, tk, ens.segment_at(q, k), yhat, z, ens.dt,
                                         config.implicit_iterations);
        sol.y_paths(q, k) = y_new;
        if (k > 0) contrib[q] -= yhat - y_new;  // the driver charge at this step
      }
    });
  }

  sol.value_at_start = sol.y_paths(0, 0);

  // Path bootstrap of the start value with frozen regression coefficients:
  // resample the telescoped contributions and the centred Z targets jointly.
  const Segment x0 = ens.segment_at(0, 0);
  const double mean_y1 = sol.y_paths.col(1).mean();
  Mat zw(n_paths, d);
  for (Index q = 0; q < n_paths; ++q)
    zw.row(q) = (sol.y_paths(q, 1) - mean_y1) *
                ens.dw[static_cast<std::size_t>(q)].col(0).transpose() / ens.dt;
  Vec stats(config.bootstrap_rounds);
  for (int r = 0; r < config.bootstrap_rounds; ++r) {
    double csum = 0.0;
    Vec zsum = Vec::Zero(d);
    for (Index i = 0; i < n_paths; ++i) {
      const auto key = std::array<std::uint32_t, 2>{static_cast<std::uint32_t>(config.seed),
                                                    static_cast<std::uint32_t>(config.seed >> 32)};
      const auto out = philox4x32({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(i),
                                   static_cast<std::uint32_t>(i >> 32), 0x76616c75u},
                                  key);
      const std::uint64_t bits = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
      const auto idx = static_cast<Index>(bits % static_cast<std::uint64_t>(n_paths));
      csum += contrib[idx];
      zsum += zw.row(idx).transpose();
    }
    const double yhat = csum / static_cast<double>(n_paths);
    const Vec z = zsum / static_cast<double>(n_paths);
    stats[r] = driver_step(driver, ens.t0, x0, yhat, z, ens.dt, config.implicit_iterations);
  }
  const MeanSe bs = mean_se(stats);
  sol.value_std_error = bs.std_error * std::sqrt(static_cast<double>(config.bootstrap_rounds));
  return sol;
}

double value_surrogate(const BsdeSolution& solution, const Driver& driver, Index k,
                       const Segment& x, int implicit_iterations) {
  if (k >= solution.num_steps) return 0.0;
  const double yhat = solution.y_surrogate(k, x);
  const Vec z = solution.z_surrogate(k, x);
  return driver_step(driver, solution.time(k), x, yhat, z, solution.dt, implicit_iterations);
}

std::pair<double, double> value_function(const CoefficientModel& model, const Driver& driver,
                                         const SegmentFunctional& terminal, double t,
                                         const Segment& x, const SolverConfig& config) {
  const Index steps = steps_between(t, config.horizon_T, x.grid.step_h);
  const NoiseGrid noise(config.seed, config.num_paths, x.grid.dim_d, x.grid.step_h, steps);
  const PathEnsemble ens = simulate_forward(model, t, x, noise, config.threads);
  const BsdeSolution sol =
      solve_backward(ens, driver, terminal, RegressionBasis::make_default(x.grid), config);
  return {sol.value_at_start, sol.value_std_error};
}

Vec spot_gradient(const BsdeSolution& solution, const CoefficientModel& model,
                  const PathEnsemble& ens, Index k, Index path) {
  const Vec z = solution.z_paths[static_cast<std::size_t>(k)].row(path).transpose();
  const Mat sigma = model.diffusion_sigma(ens.time(k), ens.segment_at(path, k));
  const Mat a = sigma * sigma.transpose();
  const Eigen::FullPivLU<Mat> lu(a);
  if (!lu.isInvertible())
    throw SimulationError("spot_gradient: sigma sigma^T singular at step " + std::to_string(k) +
                          ", path " + std::to_string(path));
  return lu.solve(sigma * z);
}

ZIdentReport z_identification_check(const CoefficientModel& model, const Driver& driver,
                                    const SegmentFunctional& terminal, double t, const Segment& x,
                                    const SolverConfig& config) {
  const GridSpec& g = x.grid;
  const Index n = g.dim_n;
  const Index steps = steps_between(t, config.horizon_T, g.step_h);
  const NoiseGrid noise(config.seed, config.num_paths, g.dim_d, g.step_h, steps);
  const RegressionBasis basis = RegressionBasis::make_default(g);

  const PathEnsemble ens = simulate_forward(model, t, x, noise, config.threads);
  const BsdeSolution sol = solve_backward(ens, driver, terminal, basis, config);

  ZIdentReport report;
  report.regression_estimate = spot_gradient(sol, model, ens, 0, 0);

  // Regression-side standard error: bootstrap of Z_0, pushed through the
  // pseudo-inverse map.
  const Mat sigma = model.diffusion_sigma(t, x);
  const Mat a = sigma * sigma.transpose();
  const Mat pinv_map = Eigen::FullPivLU<Mat>(a).solve(sigma);  // n x d
  Vec z0_se(g.dim_d);
  const double mean_y1 = sol.y_paths.col(1).mean();
  for (Index j = 0; j < g.dim_d; ++j) {
    Vec zw(ens.num_paths);
    for (Index q = 0; q < ens.num_paths; ++q)
      zw[q] = (sol.y_paths(q, 1) - mean_y1) * ens.dw[static_cast<std::size_t>(q)](j, 0) / ens.dt;
    z0_se[j] = mean_se(zw, config.threads).std_error;
  }
  report.regression_se = (pinv_map.cwiseAbs2() * z0_se.cwiseAbs2()).cwiseSqrt();

  // Bump side: hat direction of width h at the current-time node, value
  // delta at 0, on common noise.
  const double delta = 1e-2 * (1.0 + std::abs(x.values(0, g.past_points_m)));
  report.bump_delta = delta;
  report.bump_width = g.step_h;
  report.bump_estimate.resize(n);
  report.bump_se.resize(n);
  for (Index i = 0; i < n; ++i) {
    Segment up = x;
    up.values(i, g.past_points_m) += delta;
    Segment down = x;
    down.values(i, g.past_points_m) -= delta;
    const BsdeSolution sp =
        solve_backward(simulate_forward(model, t, up, noise, config.threads), driver, terminal,
                       basis, config);
    const BsdeSolution sm =
        solve_backward(simulate_forward(model, t, down, noise, config.threads), driver, terminal,
                       basis, config);
    report.bump_estimate[i] = (sp.value_at_start - sm.value_at_start) / (2.0 * delta);
    report.bump_se[i] =
        combined_se(sp.value_std_error, sm.value_std_error) / (2.0 * delta);
  }

  const double v = sol.value_at_start;
  double sum_rel = 0.0;
  double max_rel = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double scale = std::max(std::abs(report.bump_estimate[i]), 1e-3 * (1.0 + std::abs(v)));
    const double rel = std::abs(report.regression_estimate[i] - report.bump_estimate[i]) / scale;
    sum_rel += rel;
    max_rel = std::max(max_rel, rel);
  }
  report.mean_rel_error = sum_rel / static_cast<double>(n);
  report.max_rel_error = max_rel;
  return report;
}

void write_solution_csv(const BsdeSolution& sol, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("write_solution_csv: cannot open " + path);
  std::fprintf(f, "k,time,y_mean,z_mean,r2\n");
  for (Index k = 0; k <= sol.num_steps; ++k) {
    const double ymean = sol.y_paths.col(k).mean();
    double zmean = 0.0;
    if (k < sol.num_steps) zmean = sol.z_paths[static_cast<std::size_t>(k)].col(0).mean();
    std::fprintf(f, "%lld,%.17g,%.17g,%.17g,%.17g\n", static_cast<long long>(k), sol.time(k),
                 ymean, zmean, k < sol.num_steps ? sol.r2_y[k] : 1.0);
  }
  std::fclose(f);
}

}  // namespace dfb
