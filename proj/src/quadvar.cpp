#include "dfb/quadvar.hpp"

#include <cmath>
#include <cstdio>

#include "dfb/parallel.hpp"

namespace dfb {

TimeFunctional as_time_functional(SegmentFunctional f) {
  TimeFunctional u;
  u.value = [f](double, const Segment& x) { return functional_eval(f, x); };
  u.gradient = [f](double, const Segment& x) { return functional_gradient(f, x); };
  return u;
}

Mat functional_path_values(const TimeFunctional& u, const PathEnsemble& ens, int threads) {
  Mat out(ens.num_paths, ens.num_steps + 1);
  parallel_for(ens.num_paths, threads, [&](Index p0, Index p1) {
    for (Index p = p0; p < p1; ++p)
      for (Index k = 0; k <= ens.num_steps; ++k)
        out(p, k) = u.value(ens.time(k), ens.segment_at(p, k));
  });
  return out;
}

Mat wiener_component_path(const PathEnsemble& ens, int component) {
  Mat out = Mat::Zero(ens.num_paths, ens.num_steps + 1);
  for (Index p = 0; p < ens.num_paths; ++p) {
    double acc = 0.0;
    for (Index k = 0; k < ens.num_steps; ++k) {
      acc += ens.dw[static_cast<std::size_t>(p)](component, k);
      out(p, k + 1) = acc;
    }
  }
  return out;
}

namespace {

Index grid_index(double value, double origin, double dt, const char* what) {
  const double raw = (value - origin) / dt;
  const auto idx = static_cast<Index>(std::llround(raw));
  if (std::abs(raw - static_cast<double>(idx)) > 1e-9)
    throw ConfigError(std::string(what) + " must sit on the simulation grid");
  return idx;
}

}  // namespace

Vec joint_qv_estimate(const Mat& u_values, const Mat& w_values, double t0, double dt, double eps,
                      double t_lo, double t_hi) {
  const Index e = grid_index(eps, 0.0, dt, "joint_qv_estimate: eps");
  if (e < 1) throw ConfigError("joint_qv_estimate: eps must be a positive multiple of dt");
  const Index k_lo = grid_index(t_lo, t0, dt, "joint_qv_estimate: window start");
  const Index k_hi = grid_index(t_hi, t0, dt, "joint_qv_estimate: window end");
  const Index last = u_values.cols() - 1;
  if (k_lo < 0 || k_hi < k_lo) throw ConfigError("joint_qv_estimate: bad window");
  if (k_hi + e > last)
    throw std::domain_error("joint_qv_estimate: window end plus eps exceeds the horizon");
  Vec out(u_values.rows());
  for (Index p = 0; p < u_values.rows(); ++p) {
    double acc = 0.0;
    for (Index k = k_lo; k < k_hi; ++k)
      acc += (u_values(p, k + e) - u_values(p, k)) * (w_values(p, k + e) - w_values(p, k));
    out[p] = acc * dt / eps;
  }
  return out;
}

Vec qv_prediction(const CoefficientModel& model, const TimeFunctional& u, const PathEnsemble& ens,
                  double t_lo, double t_hi, int component, int threads) {
  const Index k_lo = grid_index(t_lo, ens.t0, ens.dt, "qv_prediction: window start");
  const Index k_hi = grid_index(t_hi, ens.t0, ens.dt, "qv_prediction: window end");
  Vec out(ens.num_paths);
  parallel_for(ens.num_paths, threads, [&](Index p0, Index p1) {
    for (Index p = p0; p < p1; ++p) {
      double acc = 0.0;
      for (Index k = k_lo; k < k_hi; ++k) {
        const double tk = ens.time(k);
        const Segment window = ens.segment_at(p, k);
        const Vec mass = u.gradient(tk, window).atom_at_zero;
        acc += model.diffusion_sigma(tk, window).col(component).dot(mass) * ens.dt;
      }
      out[p] = acc;
    }
  });
  return out;
}

ConvergenceStudy convergence_study(const CoefficientModel& model, const TimeFunctional& u,
                                   double t, const Segment& x, const std::vector<double>& eps_list,
                                   const NoiseGrid& noise, double t_lo, double t_hi, int component,
                                   int threads) {
  const PathEnsemble ens = simulate_forward(model, t, x, noise, threads);
  const Mat u_values = functional_path_values(u, ens, threads);
  const Mat w_values = wiener_component_path(ens, component);
  const Vec prediction = qv_prediction(model, u, ens, t_lo, t_hi, component, threads);

  ConvergenceStudy study;
  for (double eps : eps_list) {
    const Vec estimate = joint_qv_estimate(u_values, w_values, ens.t0, ens.dt, eps, t_lo, t_hi);
    const Vec err = estimate - prediction;
    const MeanSe abs_stats = mean_se(err.cwiseAbs(), threads);
    const MeanSe signed_stats = mean_se(err, threads);
    study.rows.push_back({eps, abs_stats.mean, abs_stats.std_error, signed_stats.mean,
                          signed_stats.std_error});
  }

  study.decreasing_trend = true;
  for (std::size_t i = 1; i < study.rows.size(); ++i) {
    const auto& prev = study.rows[i - 1];
    const auto& cur = study.rows[i];
    const double slack = 2.0 * combined_se(prev.std_error, cur.std_error);
    if (cur.mean_abs_error > prev.mean_abs_error + slack) study.decreasing_trend = false;
  }
  if (!study.rows.empty()) {
    const auto& last = study.rows.back();
    study.final_mean_within_5se =
        std::abs(last.mean_signed_error) <= 5.0 * last.signed_std_error;
  }
  return study;
}

void write_convergence_csv(const ConvergenceStudy& study, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("write_convergence_csv: cannot open " + path);
  std::fprintf(f, "epsilon,mean_abs_error,std_error\n");
  for (const auto& row : study.rows)
    std::fprintf(f, "%.17g,%.17g,%.17g\n", row.eps, row.mean_abs_error, row.std_error);
  std::fclose(f);
}

}  // namespace dfb
