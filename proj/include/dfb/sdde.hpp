#pragma once

#include <functional>
#include <string>

#include "dfb/ensemble.hpp"
#include "dfb/model.hpp"
#include "dfb/rng.hpp"
#include "dfb/stats.hpp"

namespace dfb {

/// Control channel: (t, window state, control value) -> R^d drift loading.
using ChannelFn = std::function<Vec(double, const Segment&, const Vec&)>;

/// A control policy; evaluated per (path, step) on the live window state.
class Policy {
 public:
  static Policy none(std::string id = "none");
  static Policy constant(Vec u, std::string id = "const");
  static Policy open_loop(std::vector<Mat> per_path, std::string id = "open_loop");
  static Policy feedback(std::function<Vec(double, const Segment&)> fn,
                         std::string id = "feedback");

  Vec at(Index path, Index step, double t, const Segment& x) const;
  const std::string& id() const { return id_; }

 private:
  Vec constant_u_;
  std::vector<Mat> open_loop_;
  std::function<Vec(double, const Segment&)> feedback_;
  std::string id_;
};

/// Additive perturbation of the increment at one step, shared by all paths.
struct NoiseBump {
  Index step = 0;
  Vec delta;
};

/**
 * Explicit Euler simulation of dy = b(t, X) dt + sigma(t, X) dW from the
 * initial window x at time t.  The step equals the window step, so the shift
 * of the state is exact.  Fails fast on non-finite states.
 */
PathEnsemble simulate_forward(const CoefficientModel& model, double t, const Segment& x,
                              const NoiseGrid& noise, int threads = 1,
                              const NoiseBump* bump = nullptr);

/// Euler simulation of the controlled dynamics, drift b + sigma * h(t, X, u).
/// Records the control used at every (path, step).
PathEnsemble simulate_controlled(const CoefficientModel& model, const ChannelFn& h,
                                 const Policy& policy, double t, const Segment& x,
                                 const NoiseGrid& noise, int threads = 1);

/**
 * Density weight exp(-sum_k h_k . dW_k - 1/2 sum_k |h_k|^2 dt) of the measure
 * under which W + integral of h dt is a Brownian motion.  Reweighting by it
 * turns sample means into expectations under dynamics with drift shifted by
 * -sigma h; pass the negated channel for the +sigma h direction.
 */
double girsanov_weight(const PathEnsemble& ens, Index path, const ChannelFn& h,
                       const Policy& policy);

/// Monte Carlo estimate of E phi(X_tau) started from (t, x).
MeanSe semigroup_apply(const CoefficientModel& model, const SegmentFunctional& phi, double t,
                       double tau, const Segment& x, const NoiseGrid& noise, int threads = 1);

}  // namespace dfb
