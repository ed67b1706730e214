#ifndef NVSPLIT_PATHS_HPP
#define NVSPLIT_PATHS_HPP

#include <nvsplit/core.hpp>
#include <nvsplit/rng.hpp>

#include <Eigen/Core>

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace nvsplit {

/// Uniform subdivision t_k = k T / N of [0, T].
class TimeGrid {
 public:
  TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
      throw ConfigError("TimeGrid: horizon must be positive and finite");
    }
    if (steps < 1) throw ConfigError("TimeGrid: step count must be at least 1");
  }

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  double step() const { return horizon_ / steps_; }

  /// Computed as k·T/N, never accumulated, so time(N) == T exactly.
  double time(int k) const { return k * horizon_ / steps_; }

  /// Last grid point before s with the (t_k, t_{k+1}] convention; 0 at s = 0.
  double last_before(double s) const {
    if (s <= 0.0) return 0.0;
    const int k = static_cast<int>(std::ceil(s / horizon_ * steps_)) - 1;
    return time(std::max(k, 0));
  }

  /// First grid point at or after s with the (t_k, t_{k+1}] convention; 0 at s = 0.
  double first_after(double s) const {
    if (s <= 0.0) return 0.0;
    const int k = static_cast<int>(std::ceil(s / horizon_ * steps_));
    return time(std::min(k, steps_));
  }

  bool operator==(const TimeGrid&) const = default;

 private:
  double horizon_;
  int steps_;
};

/// Ratio fine/coarse as a power-of-two exponent, or a ConfigError.
inline int dyadic_levels(int fine_steps, int coarse_steps) {
  if (coarse_steps < 1 || fine_steps % coarse_steps != 0) {
    throw ConfigError("grid with " + std::to_string(coarse_steps) +
                      " steps does not divide the fine grid of " + std::to_string(fine_steps));
  }
  const auto ratio = static_cast<unsigned>(fine_steps / coarse_steps);
  if (!std::has_single_bit(ratio)) {
    throw ConfigError("refinement ratio " + std::to_string(ratio) + " is not a power of two");
  }
  return std::countr_zero(ratio);
}

/// Increments of a d-dimensional Brownian motion on a grid. Column k holds
/// W_{t_{k+1}} − W_{t_k}.
struct BrownianPath {
  int d = 0;
  TimeGrid grid{1.0, 1};
  Eigen::MatrixXd increments;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;

  /// W at every grid time, (d × (N+1)), starting from zero.
  Eigen::MatrixXd values() const {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, grid.steps() + 1);
    for (int k = 0; k < grid.steps(); ++k) w.col(k + 1) = w.col(k) + increments.col(k);
    return w;
  }
};

/// Increment (j, k) is √h · Φ⁻¹(U) with U addressed by
/// (seed, path_index, first_stream + j, k).
inline BrownianPath make_path(std::uint64_t seed, std::uint64_t path_index, int d,
                              const TimeGrid& grid,
                              std::uint32_t first_stream = stream::kBrownian) {
  if (d < 0) throw ConfigError("make_path: negative driving dimension");
  BrownianPath p;
  p.d = d;
  p.grid = grid;
  p.seed = seed;
  p.path_index = path_index;
  p.increments.resize(d, grid.steps());
  const CounterRng rng(seed, path_index);
  const double scale = std::sqrt(grid.step());
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < grid.steps(); ++k) {
      p.increments(j, k) =
          scale * rng.normal(first_stream + static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(k));
    }
  }
  return p;
}

/// Aggregates increments onto a coarser grid by repeated pairwise halving, so
/// coarsening in stages and coarsening directly give bit-identical results.
inline BrownianPath coarsen(const BrownianPath& path, int steps) {
  const int levels = dyadic_levels(path.grid.steps(), steps);
  BrownianPath out = path;
  for (int level = 0; level < levels; ++level) {
    const int half = static_cast<int>(out.increments.cols()) / 2;
    Eigen::MatrixXd next(out.d, half);
    for (int k = 0; k < half; ++k) next.col(k) = out.increments.col(2 * k) + out.increments.col(2 * k + 1);
    out.increments = std::move(next);
  }
  out.grid = TimeGrid(path.grid.horizon(), steps);
  return out;
}

/// i.i.d. ±1 coins η_1..η_N drawn from a stream disjoint from the Brownian one.
struct RademacherSeq {
  std::vector<int> values;  // values[k] = η_{k+1}
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;

  int at_step(int k) const { return values[static_cast<std::size_t>(k)]; }

  static RademacherSeq constant(int steps, int value) {
    RademacherSeq s;
    s.values.assign(static_cast<std::size_t>(steps), value);
    return s;
  }
};

inline RademacherSeq make_rademacher(std::uint64_t seed, std::uint64_t path_index, int steps) {
  RademacherSeq s;
  s.seed = seed;
  s.path_index = path_index;
  s.values.resize(static_cast<std::size_t>(steps));
  const CounterRng rng(seed, path_index);
  const std::uint32_t stream_id = stream::kRademacher | (static_cast<std::uint32_t>(steps) & 0x3fffffffu);
  for (int k = 0; k < steps; ++k) {
    s.values[static_cast<std::size_t>(k)] = rng.rademacher(stream_id, static_cast<std::uint32_t>(k));
  }
  return s;
}

}  // namespace nvsplit

#endif  // NVSPLIT_PATHS_HPP
