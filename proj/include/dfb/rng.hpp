#pragma once

#include <array>
#include <cstdint>

#include "dfb/errors.hpp"
#include "dfb/types.hpp"

namespace dfb {

/**
 * Counter-based random numbers (Philox 4x32-10).
 *
 * Every draw is a pure function of (key, counter); there is no generator
 * state.  Increments keyed by (seed, path, step) are therefore identical
 * whatever the number of workers or the order in which paths are evaluated.
 */
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Uniform in (0,1) built from two 32-bit lanes (53-bit mantissa, never 0 or 1).
double uniform_from_bits(std::uint32_t hi, std::uint32_t lo);

/// Standard normal pair from one Philox block (Box-Muller).
std::array<double, 2> gaussian_pair(std::uint64_t seed, std::uint64_t stream,
                                    std::uint32_t a, std::uint32_t b, std::uint32_t c);

/**
 * Brownian increments on a uniform time grid.
 *
 * increment(p, k) is an R^d Gaussian vector with covariance dt*I drawn from
 * the substream keyed by (seed, p, step_offset + k).  suffix(k0) yields the
 * grid that continues a simulation from step k0 with the same substreams, so
 * a restarted path reuses exactly the increments of the original one.
 */
class NoiseGrid {
 public:
  NoiseGrid() = default;
  NoiseGrid(std::uint64_t seed, Index num_paths, int dim_d, double dt, Index num_steps,
            Index step_offset = 0);

  Vec increment(Index path, Index step) const;

  std::uint64_t seed() const { return seed_; }
  Index num_paths() const { return num_paths_; }
  int dim_d() const { return dim_d_; }
  double dt() const { return dt_; }
  Index num_steps() const { return num_steps_; }
  Index step_offset() const { return step_offset_; }

  NoiseGrid suffix(Index from_step) const;
  NoiseGrid with_steps(Index num_steps) const;
  NoiseGrid with_paths(Index num_paths) const;

 private:
  std::uint64_t seed_ = 0;
  Index num_paths_ = 0;
  int dim_d_ = 1;
  double dt_ = 0.0;
  Index num_steps_ = 0;
  Index step_offset_ = 0;
  double sqrt_dt_ = 0.0;
};

}  // namespace dfb
