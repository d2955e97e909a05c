#include "dfb/ensemble.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>

namespace dfb {

Index steps_between(double t0, double horizon, double dt) {
  if (dt <= 0.0) throw ConfigError("steps_between: dt must be > 0");
  const double raw = (horizon - t0) / dt;
  const auto steps = static_cast<Index>(std::llround(raw));
  if (steps < 0 || std::abs(raw - static_cast<double>(steps)) > 1e-9)
    throw ConfigError("steps_between: horizon - t0 must be a nonnegative multiple of dt");
  return steps;
}

void write_ensemble_csv(const PathEnsemble& ens, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("write_ensemble_csv: cannot open " + path);
  const Index n = ens.grid.dim_n;
  std::fprintf(f, "path,step,time");
  for (Index i = 0; i < n; ++i) std::fprintf(f, ",y%lld", static_cast<long long>(i));
  const Index du = ens.controls ? (*ens.controls)[0].rows() : 0;
  for (Index i = 0; i < du; ++i) std::fprintf(f, ",u%lld", static_cast<long long>(i));
  std::fprintf(f, "\n");
  for (Index p = 0; p < ens.num_paths; ++p) {
    for (Index k = 0; k <= ens.num_steps; ++k) {
      std::fprintf(f, "%lld,%lld,%.17g", static_cast<long long>(p), static_cast<long long>(k),
                   ens.time(k));
      for (Index i = 0; i < n; ++i)
        std::fprintf(f, ",%.17g", ens.y[static_cast<std::size_t>(p)](i, ens.grid.past_points_m + k));
      for (Index i = 0; i < du; ++i)
        std::fprintf(f, ",%.17g",
                     k < ens.num_steps ? (*ens.controls)[static_cast<std::size_t>(p)](i, k) : 0.0);
      std::fprintf(f, "\n");
    }
  }
  std::fclose(f);
}

namespace {

constexpr std::uint64_t kMagic = 0x44464245u;  // "DFBE"

void put_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint64_t get_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
void put_f64(std::ofstream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
double get_f64(std::ifstream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void write_ensemble_binary(const PathEnsemble& ens, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_ensemble_binary: cannot open " + path);
  put_u64(out, kMagic);
  put_u64(out, static_cast<std::uint64_t>(ens.grid.past_points_m));
  put_u64(out, static_cast<std::uint64_t>(ens.grid.dim_n));
  put_u64(out, static_cast<std::uint64_t>(ens.grid.dim_d));
  put_f64(out, ens.grid.delay_r);
  put_f64(out, ens.t0);
  put_f64(out, ens.dt);
  put_u64(out, static_cast<std::uint64_t>(ens.num_steps));
  put_u64(out, static_cast<std::uint64_t>(ens.num_paths));
  const Index du = ens.controls ? (*ens.controls)[0].rows() : 0;
  put_u64(out, static_cast<std::uint64_t>(du));
  for (Index p = 0; p < ens.num_paths; ++p) {
    const Mat& yp = ens.y[static_cast<std::size_t>(p)];
    out.write(reinterpret_cast<const char*>(yp.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(yp.size())));
    const Mat& wp = ens.dw[static_cast<std::size_t>(p)];
    out.write(reinterpret_cast<const char*>(wp.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(wp.size())));
    if (du > 0) {
      const Mat& up = (*ens.controls)[static_cast<std::size_t>(p)];
      out.write(reinterpret_cast<const char*>(up.data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(up.size())));
    }
  }
}

PathEnsemble read_ensemble_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("read_ensemble_binary: cannot open " + path);
  if (get_u64(in) != kMagic) throw ConfigError("read_ensemble_binary: bad magic in " + path);
  const int m = static_cast<int>(get_u64(in));
  const int n = static_cast<int>(get_u64(in));
  const int d = static_cast<int>(get_u64(in));
  const double r = get_f64(in);
  PathEnsemble ens;
  ens.grid = GridSpec::make(r, m, n, d);
  ens.t0 = get_f64(in);
  ens.dt = get_f64(in);
  ens.num_steps = static_cast<Index>(get_u64(in));
  ens.num_paths = static_cast<Index>(get_u64(in));
  const auto du = static_cast<Index>(get_u64(in));
  ens.y.resize(static_cast<std::size_t>(ens.num_paths));
  ens.dw.resize(static_cast<std::size_t>(ens.num_paths));
  if (du > 0) ens.controls.emplace(static_cast<std::size_t>(ens.num_paths));
  for (Index p = 0; p < ens.num_paths; ++p) {
    Mat yp(n, m + ens.num_steps + 1);
    in.read(reinterpret_cast<char*>(yp.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(yp.size())));
    ens.y[static_cast<std::size_t>(p)] = std::move(yp);
    Mat wp(d, ens.num_steps);
    in.read(reinterpret_cast<char*>(wp.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(wp.size())));
    ens.dw[static_cast<std::size_t>(p)] = std::move(wp);
    if (du > 0) {
      Mat up(du, ens.num_steps);
      in.read(reinterpret_cast<char*>(up.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(up.size())));
      (*ens.controls)[static_cast<std::size_t>(p)] = std::move(up);
    }
  }
  if (!in) throw ConfigError("read_ensemble_binary: truncated file " + path);
  return ens;
}

}  // namespace dfb
