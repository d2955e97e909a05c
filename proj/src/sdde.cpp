#include "dfb/sdde.hpp"

#include <cmath>

#include "dfb/parallel.hpp"

namespace dfb {

Policy Policy::none(std::string id) {
  Policy p;
  p.constant_u_ = Vec(0);
  p.id_ = std::move(id);
  return p;
}

Policy Policy::constant(Vec u, std::string id) {
  Policy p;
  p.constant_u_ = std::move(u);
  p.id_ = std::move(id);
  return p;
}

Policy Policy::open_loop(std::vector<Mat> per_path, std::string id) {
  Policy p;
  p.open_loop_ = std::move(per_path);
  p.id_ = std::move(id);
  return p;
}

Policy Policy::feedback(std::function<Vec(double, const Segment&)> fn, std::string id) {
  Policy p;
  p.feedback_ = std::move(fn);
  p.id_ = std::move(id);
  return p;
}

Vec Policy::at(Index path, Index step, double t, const Segment& x) const {
  if (feedback_) return feedback_(t, x);
  if (!open_loop_.empty()) return open_loop_[static_cast<std::size_t>(path)].col(step);
  return constant_u_;
}

namespace {

void check_grid(const CoefficientModel&, const Segment& x, const NoiseGrid& noise) {
  if (std::abs(noise.dt() - x.grid.step_h) > 1e-12 * std::max(1.0, x.grid.step_h))
    throw ConfigError("simulate: noise step must equal the window step (m * dt == r)");
  if (noise.dim_d() != x.grid.dim_d)
    throw ConfigError("simulate: noise dimension differs from grid dim_d");
}

PathEnsemble run_euler(const CoefficientModel& model, const ChannelFn* h, const Policy* policy,
                       double t, const Segment& x, const NoiseGrid& noise, int threads,
                       const NoiseBump* bump = nullptr) {
  check_grid(model, x, noise);
  const GridSpec& g = x.grid;
  const Index m = g.past_points_m;
  const Index steps = noise.num_steps();
  const Index npaths = noise.num_paths();

  PathEnsemble ens;
  ens.grid = g;
  ens.t0 = t;
  ens.dt = noise.dt();
  ens.num_steps = steps;
  ens.num_paths = npaths;
  ens.y.resize(static_cast<std::size_t>(npaths));
  ens.dw.resize(static_cast<std::size_t>(npaths));

  Index dim_u = 0;
  if (h) {
    const Vec u0 = policy->at(0, 0, t, x);
    dim_u = u0.size();
    ens.controls.emplace(static_cast<std::size_t>(npaths));
  }

  parallel_for(npaths, threads, [&](Index p0, Index p1) {
    Segment window{g, Mat(g.dim_n, m + 1)};
    for (Index p = p0; p < p1; ++p) {
      Mat& yp = ens.y[static_cast<std::size_t>(p)];
      yp.resize(g.dim_n, m + steps + 1);
      yp.leftCols(m + 1) = x.values;
      Mat& wp = ens.dw[static_cast<std::size_t>(p)];
      wp.resize(g.dim_d, steps);
      Mat* up = nullptr;
      if (h) {
        up = &(*ens.controls)[static_cast<std::size_t>(p)];
        up->resize(dim_u, steps);
      }
      for (Index k = 0; k < steps; ++k) {
        const double tk = ens.time(k);
        window.values = yp.middleCols(k, m + 1);
        Vec dwk = noise.increment(p, k);
        if (bump && k == bump->step) dwk += bump->delta;
        wp.col(k) = dwk;
        Vec drift = model.drift_b(tk, window);
        const Mat sig = model.diffusion_sigma(tk, window);
        if (h) {
          const Vec u = policy->at(p, k, tk, window);
          up->col(k) = u;
          drift += sig * (*h)(tk, window, u);
        }
        yp.col(m + k + 1) = yp.col(m + k) + drift * ens.dt + sig * dwk;
        if (!yp.col(m + k + 1).allFinite())
          throw SimulationError("simulate: non-finite state at path " + std::to_string(p) +
                                ", step " + std::to_string(k + 1));
      }
    }
  });
  return ens;
}

}  // namespace

PathEnsemble simulate_forward(const CoefficientModel& model, double t, const Segment& x,
                              const NoiseGrid& noise, int threads, const NoiseBump* bump) {
  return run_euler(model, nullptr, nullptr, t, x, noise, threads, bump);
}

PathEnsemble simulate_controlled(const CoefficientModel& model, const ChannelFn& h,
                                 const Policy& policy, double t, const Segment& x,
                                 const NoiseGrid& noise, int threads) {
  return run_euler(model, &h, &policy, t, x, noise, threads);
}

double girsanov_weight(const PathEnsemble& ens, Index path, const ChannelFn& h,
                       const Policy& policy) {
  double ito_sum = 0.0;
  double quad_sum = 0.0;
  const Mat& wp = ens.dw[static_cast<std::size_t>(path)];
  for (Index k = 0; k < ens.num_steps; ++k) {
    const double tk = ens.time(k);
    const Segment window = ens.segment_at(path, k);
    const Vec u = ens.controls ? (*ens.controls)[static_cast<std::size_t>(path)].col(k).eval()
                               : policy.at(path, k, tk, window);
    const Vec hk = h(tk, window, u);
    ito_sum += hk.dot(wp.col(k));
    quad_sum += hk.squaredNorm();
  }
  return std::exp(-ito_sum - 0.5 * quad_sum * ens.dt);
}

MeanSe semigroup_apply(const CoefficientModel& model, const SegmentFunctional& phi, double t,
                       double tau, const Segment& x, const NoiseGrid& noise, int threads) {
  if (tau < t) throw ConfigError("semigroup_apply: tau must be >= t");
  const Index steps = steps_between(t, tau, noise.dt());
  if (steps == 0) return MeanSe{functional_eval(phi, x), 0.0, noise.num_paths()};
  const PathEnsemble ens = simulate_forward(model, t, x, noise.with_steps(steps), threads);
  Vec values(ens.num_paths);
  parallel_for(ens.num_paths, threads, [&](Index p0, Index p1) {
    for (Index p = p0; p < p1; ++p)
      values[p] = functional_eval(phi, ens.segment_at(p, steps));
  });
  return mean_se(values, threads);
}

}  // namespace dfb
