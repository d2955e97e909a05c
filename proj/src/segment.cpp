#include "dfb/segment.hpp"

#include <cmath>
#include <string>

namespace dfb {

GridSpec GridSpec::make(double requested_r, int m, int n, int d) {
  if (requested_r <= 0.0) throw ConfigError("GridSpec: delay r must be > 0");
  if (m < 1) throw ConfigError("GridSpec: past_points_m must be >= 1");
  if (n < 1 || d < 1) throw ConfigError("GridSpec: dim_n and dim_d must be >= 1");
  GridSpec g;
  g.step_h = requested_r / static_cast<double>(m);
  g.past_points_m = m;
  g.delay_r = g.step_h * static_cast<double>(m);  // canonical r = m*h
  g.dim_n = n;
  g.dim_d = d;
  return g;
}

Segment make_segment(const GridSpec& grid, Mat values) {
  if (values.rows() != grid.dim_n || values.cols() != grid.past_points_m + 1)
    throw ConfigError("Segment: values must be dim_n x (past_points_m + 1)");
  if (!values.allFinite()) throw ConfigError("Segment: values must be finite");
  return Segment{grid, std::move(values)};
}

Segment constant_segment(const GridSpec& grid, const Vec& value) {
  Mat v(grid.dim_n, grid.past_points_m + 1);
  v.colwise() = value;
  return make_segment(grid, std::move(v));
}

Segment constant_segment(const GridSpec& grid, double value) {
  return constant_segment(grid, Vec::Constant(grid.dim_n, value));
}

Vec evaluate(const Segment& x, double theta) {
  const GridSpec& g = x.grid;
  const double tol = 1e-9 * g.step_h;
  if (theta < -g.delay_r - tol || theta > tol)
    throw std::domain_error("evaluate: theta " + std::to_string(theta) +
                            " outside [-r, 0] with r = " + std::to_string(g.delay_r));
  const double u = (theta + g.delay_r) / g.step_h;
  const auto nearest = static_cast<Index>(std::llround(u));
  if (std::abs(u - static_cast<double>(nearest)) <= 1e-9) {
    const Index j = std::clamp<Index>(nearest, 0, g.past_points_m);
    return x.values.col(j);
  }
  const Index j0 = std::clamp<Index>(static_cast<Index>(std::floor(u)), 0, g.past_points_m - 1);
  const double w = u - static_cast<double>(j0);
  return (1.0 - w) * x.values.col(j0) + w * x.values.col(j0 + 1);
}

Segment roll(const Segment& x, const Vec& new_value) {
  const int m = x.grid.past_points_m;
  Mat v(x.values.rows(), x.values.cols());
  v.leftCols(m) = x.values.rightCols(m);
  v.col(m) = new_value;
  return Segment{x.grid, std::move(v)};
}

double sup_norm(const Segment& x) { return x.values.cwiseAbs().maxCoeff(); }

}  // namespace dfb
