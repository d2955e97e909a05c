#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dfb/segment.hpp"

namespace dfb {

/**
 * N simulated paths of the delay system on a uniform time grid.
 *
 * Per path, `y` carries the full history from t0 - r to t0 + M*dt: column
 * m + k is the state at time t0 + k*dt and the leading m+1 columns are the
 * initial segment.  Window states are reconstructed from this history, so
 * segment_at(p, k+1) == roll(segment_at(p, k), state(p, k+1)) by layout.
 * Immutable after construction.
 */
struct PathEnsemble {
  GridSpec grid;
  double t0 = 0.0;
  double dt = 0.0;
  Index num_steps = 0;
  Index num_paths = 0;
  std::vector<Mat> y;                        // per path: n x (m + num_steps + 1)
  std::vector<Mat> dw;                       // per path: d x num_steps
  std::optional<std::vector<Mat>> controls;  // per path: dim_u x num_steps

  double time(Index k) const { return t0 + dt * static_cast<double>(k); }

  /// Window state at time index k; for k <= 0 this is the initial segment.
  Segment segment_at(Index path, Index k) const {
    return Segment{grid, y[static_cast<std::size_t>(path)].middleCols(k, grid.past_points_m + 1)};
  }

  /// Copies the window columns at time index k into `out` (n x (m+1)).
  void segment_values(Index path, Index k, Mat& out) const {
    out = y[static_cast<std::size_t>(path)].middleCols(k, grid.past_points_m + 1);
  }

  Vec state(Index path, Index k) const {
    return y[static_cast<std::size_t>(path)].col(grid.past_points_m + k);
  }
};

/// Number of steps from t0 to horizon on a dt grid; the endpoints must line up.
Index steps_between(double t0, double horizon, double dt);

void write_ensemble_csv(const PathEnsemble& ens, const std::string& path);
void write_ensemble_binary(const PathEnsemble& ens, const std::string& path);
PathEnsemble read_ensemble_binary(const std::string& path);

}  // namespace dfb
