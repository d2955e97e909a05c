#include "dfb/measure.hpp"

#include <cmath>

namespace dfb {

namespace {

Vec interpolate_nodes(const GridSpec& g, const Mat& f_nodes, double theta) {
  const double u = (theta + g.delay_r) / g.step_h;
  const auto nearest = static_cast<Index>(std::llround(u));
  if (std::abs(u - static_cast<double>(nearest)) <= 1e-9) {
    const Index j = std::clamp<Index>(nearest, 0, g.past_points_m);
    return f_nodes.col(j);
  }
  const Index j0 = std::clamp<Index>(static_cast<Index>(std::floor(u)), 0, g.past_points_m - 1);
  const double w = u - static_cast<double>(j0);
  return (1.0 - w) * f_nodes.col(j0) + w * f_nodes.col(j0 + 1);
}

}  // namespace

WindowMeasure zero_measure(const GridSpec& grid, Index dim) {
  WindowMeasure mu;
  mu.grid = grid;
  mu.atom_at_zero = Vec::Zero(dim);
  mu.density_weights = Mat::Zero(dim, grid.past_points_m + 1);
  return mu;
}

WindowMeasure dirac_measure(const GridSpec& grid, double theta, const Vec& mass) {
  WindowMeasure mu = zero_measure(grid, mass.size());
  if (std::abs(theta) <= 1e-12 * std::max(1.0, grid.delay_r))
    mu.atom_at_zero = mass;
  else
    mu.interior_atoms.emplace_back(theta, mass);
  return mu;
}

WindowMeasure lebesgue_measure(const GridSpec& grid) {
  WindowMeasure mu = zero_measure(grid, 1);
  mu.density_weights.setOnes();
  mu.density_weights(0, 0) = 0.5;
  mu.density_weights(0, grid.past_points_m) = 0.5;
  return mu;
}

double pair_with(const WindowMeasure& mu, const Mat& f_nodes) {
  if (f_nodes.rows() != mu.dim() || f_nodes.cols() != mu.grid.past_points_m + 1)
    throw ConfigError("pair_with: node matrix must be dim x (m+1)");
  double acc = mu.atom_at_zero.dot(f_nodes.col(mu.grid.past_points_m));
  for (const auto& [theta, mass] : mu.interior_atoms)
    acc += mass.dot(interpolate_nodes(mu.grid, f_nodes, theta));
  acc += mu.grid.step_h * mu.density_weights.cwiseProduct(f_nodes).sum();
  return acc;
}

double pair_with(const WindowMeasure& mu, const Segment& f) {
  if (!mu.grid.same_window(f.grid) || mu.dim() != f.grid.dim_n)
    throw ConfigError("pair_with: measure and segment live on different grids");
  return pair_with(mu, f.values);
}

double total_variation(const WindowMeasure& mu) {
  double tv = mu.atom_at_zero.lpNorm<1>();
  for (const auto& [theta, mass] : mu.interior_atoms) tv += mass.lpNorm<1>();
  tv += mu.grid.step_h * mu.density_weights.cwiseAbs().sum();
  return tv;
}

WindowMeasure scaled(const WindowMeasure& mu, double factor) {
  WindowMeasure out = mu;
  out.atom_at_zero *= factor;
  for (auto& [theta, mass] : out.interior_atoms) mass *= factor;
  out.density_weights *= factor;
  return out;
}

WindowMeasure& accumulate(WindowMeasure& target, const WindowMeasure& add, double factor) {
  if (target.dim() != add.dim()) throw ConfigError("accumulate: measure dims differ");
  target.atom_at_zero += factor * add.atom_at_zero;
  for (const auto& [theta, mass] : add.interior_atoms)
    target.interior_atoms.emplace_back(theta, factor * mass);
  target.density_weights += factor * add.density_weights;
  return target;
}

}  // namespace dfb
