#include "dfb/rng.hpp"

#include <cmath>

namespace dfb {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         const std::array<std::uint32_t, 2>& key) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    philox_round(counter, key);
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return counter;
}

double uniform_from_bits(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

std::array<double, 2> gaussian_pair(std::uint64_t seed, std::uint64_t stream,
                                    std::uint32_t a, std::uint32_t b, std::uint32_t c) {
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                            static_cast<std::uint32_t>(seed >> 32)};
  const std::array<std::uint32_t, 4> ctr = {
      a, b, c, static_cast<std::uint32_t>(stream ^ (stream >> 32))};
  const auto out = philox4x32(ctr, key);
  const double u1 = uniform_from_bits(out[0], out[1]);
  const double u2 = uniform_from_bits(out[2], out[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

NoiseGrid::NoiseGrid(std::uint64_t seed, Index num_paths, int dim_d, double dt,
                     Index num_steps, Index step_offset)
    : seed_(seed),
      num_paths_(num_paths),
      dim_d_(dim_d),
      dt_(dt),
      num_steps_(num_steps),
      step_offset_(step_offset),
      sqrt_dt_(std::sqrt(dt)) {
  if (num_paths < 1) throw ConfigError("NoiseGrid: num_paths must be >= 1");
  if (dim_d < 1) throw ConfigError("NoiseGrid: dim_d must be >= 1");
  if (dt <= 0.0) throw ConfigError("NoiseGrid: dt must be > 0");
}

Vec NoiseGrid::increment(Index path, Index step) const {
  Vec dw(dim_d_);
  const std::uint32_t p = static_cast<std::uint32_t>(path);
  const std::uint32_t k = static_cast<std::uint32_t>(step_offset_ + step);
  for (int j = 0; j < dim_d_; j += 2) {
    const auto z = gaussian_pair(seed_, 0, p, k, static_cast<std::uint32_t>(j / 2));
    dw[j] = sqrt_dt_ * z[0];
    if (j + 1 < dim_d_) dw[j + 1] = sqrt_dt_ * z[1];
  }
  return dw;
}

NoiseGrid NoiseGrid::suffix(Index from_step) const {
  NoiseGrid g = *this;
  g.step_offset_ = step_offset_ + from_step;
  g.num_steps_ = num_steps_ - from_step;
  return g;
}

NoiseGrid NoiseGrid::with_steps(Index num_steps) const {
  NoiseGrid g = *this;
  g.num_steps_ = num_steps;
  return g;
}

NoiseGrid NoiseGrid::with_paths(Index num_paths) const {
  NoiseGrid g = *this;
  g.num_paths_ = num_paths;
  return g;
}

}  // namespace dfb
