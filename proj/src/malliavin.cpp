#include "dfb/malliavin.hpp"

#include <cstdio>

#include "dfb/parallel.hpp"

namespace dfb {

MalliavinState propagate_derivative(const CoefficientModel& model, const PathEnsemble& ens,
                                    Index base_step, int threads) {
  if (!model.drift_gradient || !model.diffusion_gradient)
    throw ConfigError("propagate_derivative: model must declare drift and diffusion gradients");
  if (base_step < 0 || base_step > ens.num_steps)
    throw ConfigError("propagate_derivative: base step outside the ensemble grid");

  const GridSpec& g = ens.grid;
  const Index n = g.dim_n;
  const Index d = g.dim_d;
  const Index m = g.past_points_m;
  const Index cols = m + ens.num_steps + 1;

  MalliavinState state;
  state.base_step = base_step;
  state.base_time = ens.time(base_step);
  state.deriv.resize(static_cast<std::size_t>(ens.num_paths));

  parallel_for(ens.num_paths, threads, [&](Index p0, Index p1) {
    Segment window{g, Mat(n, m + 1)};
    Segment dwindow{g, Mat(n, m + 1)};
    for (Index p = p0; p < p1; ++p) {
      auto& per_j = state.deriv[static_cast<std::size_t>(p)];
      per_j.assign(static_cast<std::size_t>(d), Mat::Zero(n, cols));
      window.values = ens.y[static_cast<std::size_t>(p)].middleCols(base_step, m + 1);
      const Mat sigma0 = model.diffusion_sigma(state.base_time, window);
      for (Index j = 0; j < d; ++j)
        per_j[static_cast<std::size_t>(j)].col(m + base_step) = sigma0.col(j);

      for (Index k = base_step; k < ens.num_steps; ++k) {
        const double tk = ens.time(k);
        window.values = ens.y[static_cast<std::size_t>(p)].middleCols(k, m + 1);
        const auto grad_b = model.drift_gradient(tk, window);
        const auto grad_sig = model.diffusion_gradient(tk, window);
        const Vec dwk = ens.dw[static_cast<std::size_t>(p)].col(k);
        for (Index j = 0; j < d; ++j) {
          Mat& dj = per_j[static_cast<std::size_t>(j)];
          dwindow.values = dj.middleCols(k, m + 1);
          Vec next = dj.col(m + k);
          for (Index i = 0; i < n; ++i) {
            next[i] += pair_with(grad_b[static_cast<std::size_t>(i)], dwindow) * ens.dt;
            for (Index l = 0; l < d; ++l)
              next[i] += pair_with(grad_sig[static_cast<std::size_t>(i * d + l)], dwindow) * dwk[l];
          }
          dj.col(m + k + 1) = next;
        }
      }
    }
  });
  return state;
}

Mat chain_rule(const SegmentFunctional& f, const MalliavinState& state, const PathEnsemble& ens,
               Index t_step, int threads) {
  if (t_step < state.base_step)
    throw ConfigError("chain_rule: t must not precede the base step");
  const GridSpec& g = ens.grid;
  const Index m = g.past_points_m;
  Mat out(ens.num_paths, g.dim_d);
  parallel_for(ens.num_paths, threads, [&](Index p0, Index p1) {
    Segment dwindow{g, Mat(g.dim_n, m + 1)};
    for (Index p = p0; p < p1; ++p) {
      const WindowMeasure grad = functional_gradient(f, ens.segment_at(p, t_step));
      for (Index j = 0; j < g.dim_d; ++j) {
        dwindow.values =
            state.deriv[static_cast<std::size_t>(p)][static_cast<std::size_t>(j)].middleCols(
                t_step, m + 1);
        out(p, j) = pair_with(grad, dwindow);
      }
    }
  });
  return out;
}

Mat bump_oracle(const CoefficientModel& model, double t, const Segment& x, const NoiseGrid& noise,
                Index base_step, double eps, Index t_step, const SegmentFunctional& f,
                int threads) {
  if (eps <= 0.0) throw ConfigError("bump_oracle: eps must be > 0");
  Mat out(noise.num_paths(), noise.dim_d());
  for (int j = 0; j < noise.dim_d(); ++j) {
    NoiseBump up{base_step, Vec::Zero(noise.dim_d())};
    up.delta[j] = eps;
    NoiseBump down{base_step, Vec::Zero(noise.dim_d())};
    down.delta[j] = -eps;
    const PathEnsemble plus = simulate_forward(model, t, x, noise, threads, &up);
    const PathEnsemble minus = simulate_forward(model, t, x, noise, threads, &down);
    parallel_for(noise.num_paths(), threads, [&](Index p0, Index p1) {
      for (Index p = p0; p < p1; ++p) {
        const double fp = functional_eval(f, plus.segment_at(p, t_step));
        const double fm = functional_eval(f, minus.segment_at(p, t_step));
        out(p, j) = (fp - fm) / (2.0 * eps);
      }
    });
  }
  return out;
}

void write_malliavin_csv(const MalliavinState& state, const PathEnsemble& ens,
                         const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw ConfigError("write_malliavin_csv: cannot open " + path);
  std::fprintf(fp, "path,j,t,value\n");
  const Index m = ens.grid.past_points_m;
  for (Index p = 0; p < ens.num_paths; ++p)
    for (Index j = 0; j < ens.grid.dim_d; ++j)
      for (Index k = state.base_step; k <= ens.num_steps; ++k)
        std::fprintf(fp, "%lld,%lld,%.17g,%.17g\n", static_cast<long long>(p),
                     static_cast<long long>(j), ens.time(k),
                     state.deriv[static_cast<std::size_t>(p)][static_cast<std::size_t>(j)](
                         0, m + k));
  std::fclose(fp);
}

}  // namespace dfb
