#ifndef NVSPLIT_ERRORLAB_HPP
#define NVSPLIT_ERRORLAB_HPP

#include <nvsplit/parallel.hpp>
#include <nvsplit/schemes.hpp>
#include <nvsplit/stats.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nvsplit {

/// Errors below this are round-off, not discretization error.
inline constexpr double kDegeneracyFloor = 1e-12;

struct RateRow {
  int N = 0;
  int M = 0;
  double err = 0.0;      ///< E[max_k ‖X_{t_k} − X̂_{t_k}‖²]^{1/2}
  double ci_half = 0.0;  ///< 95% half-width
};

struct RateFit {
  double slope = 0.0;  ///< convergence order, err ≈ C N^{−slope}
  double intercept = 0.0;
  double slope_ci = 0.0;
};

struct RateTable {
  std::string model;
  std::string scheme;
  std::vector<RateRow> rows;
  std::optional<RateFit> fit;  ///< empty when the errors are degenerate
  bool degenerate = false;
  /// Self-consistency of the refined reference: RMS of max_k ‖ref_r − ref_2r‖
  /// on the gate paths, and whether it is below the finest measured error.
  std::optional<double> gate_gap;
  bool gate_ok = true;
};

/// OLS of log err on log N; the reported slope is the positive order.
inline RateFit fit_rate(const RateTable& table) {
  if (table.rows.size() < 3) throw DegenerateData("fit_rate: need at least 3 rows");
  std::vector<double> x, y;
  for (const auto& r : table.rows) {
    if (!(r.err >= kDegeneracyFloor)) {
      throw DegenerateData("fit_rate: error " + std::to_string(r.err) + " at N=" + std::to_string(r.N) +
                           " is at the round-off floor");
    }
    x.push_back(std::log(static_cast<double>(r.N)));
    y.push_back(std::log(r.err));
  }
  const auto f = stats::ols(x, y);
  return RateFit{-f.slope, f.intercept, f.slope_ci};
}

/// Runs `scheme` on `grid` for one path. η for the randomized scheme comes from
/// the Rademacher stream of the same (seed, path_index).
inline Trajectory run_scheme(const PreparedModel& pm, Scheme scheme, const TimeGrid& grid, const BrownianPath& path,
                             const RefConfig& ref_cfg = {}) {
  switch (scheme) {
    case Scheme::euler: return simulate_euler(pm, grid, path);
    case Scheme::milstein: return simulate_milstein(pm, grid, path);
    case Scheme::nv_eta:
      return simulate_nv(pm, grid, path, make_rademacher(path.seed, path.path_index, grid.steps()));
    case Scheme::nv_commuting: return simulate_nv_commuting(pm, grid, path);
    case Scheme::reference: return reference_solution(pm, grid, path, ref_cfg);
  }
  throw ConfigError("run_scheme: unknown scheme");
}

namespace detail {

inline void validate_ladder(const std::vector<int>& n_list, int paths) {
  if (n_list.empty()) throw ConfigError("N list is empty");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] < 1) throw ConfigError("N values must be positive");
    if (i > 0 && n_list[i] <= n_list[i - 1]) throw ConfigError("N list must be strictly increasing");
  }
  if (paths < 2) throw ConfigError("need at least 2 Monte Carlo paths");
}

inline double max_sq_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).rowwise().squaredNorm().maxCoeff();
}

/// Fine grid carrying the shared Brownian path for a ladder topped by n_max.
inline TimeGrid coupling_grid(const PreparedModel& pm, int n_max, const RefConfig& cfg) {
  const int factor = pm.model().exact ? 1 : cfg.refinement * cfg.safety;
  return TimeGrid(pm.model().horizon, n_max * factor);
}

[[noreturn]] inline void rethrow_with_path(const NumericalFailure& e, std::uint64_t seed, std::size_t i) {
  throw NumericalFailure("path " + std::to_string(i) + " (seed " + std::to_string(seed) + "): " + e.what());
}

}  // namespace detail

/// Monte Carlo strong error of `scheme` against the coupled reference for
/// every N in the ladder, with the rate fit attached when not degenerate.
inline RateTable strong_error(const PreparedModel& pm, Scheme scheme, const std::vector<int>& n_list, int paths,
                              std::uint64_t seed, const RefConfig& ref_cfg = {}, int threads = 0) {
  detail::validate_ladder(n_list, paths);
  validate(ref_cfg);
  const int n_max = n_list.back();
  const TimeGrid fine = detail::coupling_grid(pm, n_max, ref_cfg);
  for (int n : n_list) dyadic_levels(fine.steps(), n);
  const TimeGrid top(pm.model().horizon, n_max);
  const bool gated = !pm.model().exact && ref_cfg.safety >= 2;
  const auto gate_count = static_cast<std::size_t>(gated ? std::min(ref_cfg.gate_paths, paths) : 0);

  const std::size_t levels = n_list.size();
  std::vector<double> stat(static_cast<std::size_t>(paths) * levels);
  std::vector<double> gate(gate_count);

  parallel_for(static_cast<std::size_t>(paths), threads, [&](std::size_t i) {
    try {
      const BrownianPath path = make_path(seed, i, pm.d(), fine);
      const Trajectory ref = reference_solution(pm, top, path, ref_cfg);
      for (std::size_t l = 0; l < levels; ++l) {
        const TimeGrid g(pm.model().horizon, n_list[l]);
        const Trajectory approx = scheme == Scheme::reference ? ref : run_scheme(pm, scheme, g, path, ref_cfg);
        stat[i * levels + l] = detail::max_sq_gap(subsample(ref, n_list[l]).states,
                                                  scheme == Scheme::reference ? subsample(approx, n_list[l]).states
                                                                              : approx.states);
      }
      if (i < gate_count) {
        RefConfig doubled = ref_cfg;
        doubled.refinement *= 2;
        gate[i] = detail::max_sq_gap(ref.states, reference_solution(pm, top, path, doubled).states);
      }
    } catch (const NumericalFailure& e) {
      detail::rethrow_with_path(e, seed, i);
    }
  });

  RateTable table;
  table.model = pm.model().name;
  table.scheme = std::string(to_string(scheme));
  for (std::size_t l = 0; l < levels; ++l) {
    std::vector<double> z(static_cast<std::size_t>(paths));
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = stat[i * levels + l];
    const double mz = stats::mean(z);
    const double err = std::sqrt(mz);
    const double sd = std::sqrt(stats::variance(z));
    const double ci = err > 0.0 ? 1.96 * sd / std::sqrt(static_cast<double>(paths)) / (2.0 * err) : 0.0;
    table.rows.push_back({n_list[l], paths, err, ci});
  }
  if (gated && gate_count > 0) {
    table.gate_gap = std::sqrt(stats::mean(gate));
    table.gate_ok = *table.gate_gap < table.rows.back().err;
  }
  try {
    table.fit = fit_rate(table);
  } catch (const DegenerateData&) {
    table.degenerate = true;
  }
  return table;
}

enum class SampleKind { U_N, V_N, U_limit, V_limit };

inline std::string_view to_string(SampleKind k) {
  switch (k) {
    case SampleKind::U_N: return "U_N";
    case SampleKind::V_N: return "V_N";
    case SampleKind::U_limit: return "U_limit";
    case SampleKind::V_limit: return "V_limit";
  }
  return "?";
}

inline SampleKind parse_kind(std::string_view s) {
  if (s == "U_N" || s == "U" || s == "u") return SampleKind::U_N;
  if (s == "V_N" || s == "V" || s == "v") return SampleKind::V_N;
  throw ConfigError("unknown sample kind '" + std::string(s) + "' (expected U_N or V_N)");
}

/// Terminal-time samples, one row per path, plus the terminal Brownian values
/// W_T of the driving path (for joint-moment checks).
struct ErrorSampleSet {
  SampleKind kind = SampleKind::U_N;
  int N = 0;
  Eigen::MatrixXd samples;
  Eigen::MatrixXd driver;
  std::uint64_t seed = 0;

  int paths() const { return static_cast<int>(samples.rows()); }
  std::vector<double> column(int c) const {
    std::vector<double> out(static_cast<std::size_t>(samples.rows()));
    for (Eigen::Index i = 0; i < samples.rows(); ++i) out[static_cast<std::size_t>(i)] = samples(i, c);
    return out;
  }
};

/// U^N_T = N (X_T − X^{NV}_T) (fixed-order NV) or V^N_T = √N (X_T − X^{NV,η}_T),
/// with X the coupled reference.
inline ErrorSampleSet normalized_error_samples(const PreparedModel& pm, int steps, int paths, std::uint64_t seed,
                                               const RefConfig& ref_cfg, SampleKind kind, int threads = 0) {
  if (kind != SampleKind::U_N && kind != SampleKind::V_N) throw ConfigError("normalized_error_samples: kind must be U_N or V_N");
  detail::validate_ladder({steps}, paths);
  validate(ref_cfg);
  RefConfig cfg = ref_cfg;
  cfg.safety = 1;
  const TimeGrid fine = detail::coupling_grid(pm, steps, cfg);
  const TimeGrid grid(pm.model().horizon, steps);
  const double scale = kind == SampleKind::U_N ? double(steps) : std::sqrt(double(steps));
  const Scheme scheme = kind == SampleKind::U_N ? Scheme::nv_commuting : Scheme::nv_eta;

  ErrorSampleSet out;
  out.kind = kind;
  out.N = steps;
  out.seed = seed;
  out.samples.resize(paths, pm.n());
  out.driver.resize(paths, pm.d());
  parallel_for(static_cast<std::size_t>(paths), threads, [&](std::size_t i) {
    try {
      const BrownianPath path = make_path(seed, i, pm.d(), fine);
      const Trajectory ref = reference_solution(pm, grid, path, cfg);
      const Trajectory approx = run_scheme(pm, scheme, grid, path);
      const auto row = static_cast<Eigen::Index>(i);
      out.samples.row(row) = scale * (ref.terminal() - approx.terminal()).transpose();
      out.driver.row(row) = path.increments.rowwise().sum().transpose();
    } catch (const NumericalFailure& e) {
      detail::rethrow_with_path(e, seed, i);
    }
  });
  return out;
}

struct LimitOptions {
  double source_scale = 1.0;  ///< multiplies the bracket source term
  int threads = 0;
};

namespace detail {

/// Euler scheme for the affine limit equation
///   Y_t = c Σ_a ∫ S_a(X_s) dB^a_s + ∫ ∂b(X_s) Y_s ds + Σ_j ∫ ∂σ^j(X_s) Y_s dW^j_s
/// with X the fine reference on W and B an independent auxiliary path.
inline ErrorSampleSet simulate_limit(const PreparedModel& pm, int paths, int fine_steps, std::uint64_t seed,
                                     const LimitOptions& opts, SampleKind kind) {
  if (paths < 2) throw ConfigError("limit SDE: need at least 2 paths");
  const auto& m = pm.model();
  const int n = pm.n(), d = pm.d();
  const TimeGrid grid(m.horizon, fine_steps);
  const double h = grid.step();
  const bool is_u = kind == SampleKind::U_limit;
  const double c = opts.source_scale * (is_u ? m.horizon / (2.0 * std::sqrt(3.0)) : std::sqrt(m.horizon / 2.0));

  std::vector<std::pair<int, int>> pairs;  // (j, m) with m < j
  if (is_u) {
    for (int j = 0; j < d; ++j) pairs.emplace_back(j, -1);
  } else {
    for (int j = 0; j < d; ++j)
      for (int q = 0; q < j; ++q) pairs.emplace_back(j, q);
  }
  const int aux = static_cast<int>(pairs.size());

  ErrorSampleSet out;
  out.kind = kind;
  out.N = fine_steps;
  out.seed = seed;
  out.samples.resize(paths, n);
  out.driver.resize(paths, d);
  parallel_for(static_cast<std::size_t>(paths), opts.threads, [&](std::size_t i) {
    try {
      const BrownianPath w = make_path(seed, i, d, grid);
      const BrownianPath b = make_path(seed, i, aux, grid, stream::kAuxiliary);
      const Eigen::MatrixXd x = m.exact ? m.exact(w) : simulate_nv_commuting(pm, grid, w).states;
      Vec y = Vec::Zero(n);
      for (int k = 0; k < grid.steps(); ++k) {
        const Vec xk = x.row(k).transpose();
        Vec next = y + h * (jacobian(m.drift, xk) * y);
        for (int j = 0; j < d; ++j) next += w.increments(j, k) * (jacobian(m.diffusion[j], xk) * y);
        for (int a = 0; a < aux; ++a) {
          const auto [j, q] = pairs[static_cast<std::size_t>(a)];
          const Vec src = is_u ? lie_bracket(pm.strat_drift(), m.diffusion[j], xk)
                               : lie_bracket(m.diffusion[j], m.diffusion[q], xk);
          next += (c * b.increments(a, k)) * src;
        }
        check_state(next, "limit SDE", k);
        y = next;
      }
      const auto row = static_cast<Eigen::Index>(i);
      out.samples.row(row) = y.transpose();
      out.driver.row(row) = w.increments.rowwise().sum().transpose();
    } catch (const NumericalFailure& e) {
      rethrow_with_path(e, seed, i);
    }
  });
  return out;
}

}  // namespace detail

/// Terminal samples of the limit of U^N:
///   U_t = T/(2√3) Σ_j ∫ [σ⁰,σ^j](X) dB̃^j + ∫ ∂b(X) U ds + Σ_j ∫ ∂σ^j(X) U dW^j.
inline ErrorSampleSet simulate_limit_sde_u(const PreparedModel& pm, int paths, int fine_steps, std::uint64_t seed,
                                           const LimitOptions& opts = {}) {
  return detail::simulate_limit(pm, paths, fine_steps, seed, opts, SampleKind::U_limit);
}

/// Terminal samples of the limit of V^N:
///   V_t = √(T/2) Σ_j Σ_{m<j} ∫ [σ^j,σ^m](X) dB^{j,m} + ∫ ∂b(X) V ds + Σ_j ∫ ∂σ^j(X) V dW^j.
inline ErrorSampleSet simulate_limit_sde_v(const PreparedModel& pm, int paths, int fine_steps, std::uint64_t seed,
                                           const LimitOptions& opts = {}) {
  return detail::simulate_limit(pm, paths, fine_steps, seed, opts, SampleKind::V_limit);
}

struct ComparisonRow {
  std::string coord;  ///< "1".."n" or "norm"
  double mean_a = 0.0, mean_b = 0.0;
  double var_a = 0.0, var_b = 0.0;
  double mean_z = 0.0;  ///< mean difference over its pooled standard error
  double var_z = 0.0;   ///< variance difference over its pooled standard error
  double ks = 0.0;
  double p = 1.0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  double alpha = 0.01;
  bool pass = true;  ///< every KS p-value ≥ alpha
};

/// Per-coordinate (and, for n > 1, Euclidean-norm) comparison of two sample
/// sets. Values with |x| ≤ zero_tol are treated as exactly zero so that two
/// round-off clouds around 0 compare equal.
inline ComparisonReport compare_distributions(const ErrorSampleSet& a, const ErrorSampleSet& b, double alpha = 0.01,
                                              double zero_tol = 1e-9) {
  if (a.samples.cols() != b.samples.cols()) {
    throw DimensionError("compare_distributions: sample sets have different dimensions");
  }
  if (a.paths() < 2 || b.paths() < 2) throw ConfigError("compare_distributions: need at least 2 samples per side");
  auto snap = [zero_tol](std::vector<double> v) {
    for (double& x : v)
      if (std::abs(x) <= zero_tol) x = 0.0;
    return v;
  };
  auto z_of = [](double diff, double se) { return se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : INFINITY); };
  auto row_of = [&](std::string label, std::vector<double> xa, std::vector<double> xb) {
    xa = snap(std::move(xa));
    xb = snap(std::move(xb));
    ComparisonRow r;
    r.coord = std::move(label);
    r.mean_a = stats::mean(xa);
    r.mean_b = stats::mean(xb);
    r.var_a = stats::variance(xa);
    r.var_b = stats::variance(xb);
    r.mean_z = z_of(r.mean_a - r.mean_b, std::sqrt(r.var_a / xa.size() + r.var_b / xb.size()));
    r.var_z = z_of(r.var_a - r.var_b, std::hypot(stats::variance_se(xa), stats::variance_se(xb)));
    r.ks = stats::ks_statistic(xa, xb);
    r.p = stats::ks_pvalue(r.ks, xa.size(), xb.size());
    return r;
  };
  ComparisonReport rep;
  rep.alpha = alpha;
  const auto n = static_cast<int>(a.samples.cols());
  for (int c = 0; c < n; ++c) rep.rows.push_back(row_of(std::to_string(c + 1), a.column(c), b.column(c)));
  if (n > 1) {
    auto norms = [](const ErrorSampleSet& s) {
      std::vector<double> out(static_cast<std::size_t>(s.paths()));
      for (int i = 0; i < s.paths(); ++i) out[static_cast<std::size_t>(i)] = s.samples.row(i).norm();
      return out;
    };
    rep.rows.push_back(row_of("norm", norms(a), norms(b)));
  }
  for (const auto& r : rep.rows) rep.pass = rep.pass && r.p >= alpha;
  return rep;
}

/// Sample mean of W^j_T · Y^c_T, the joint moment witnessing stable convergence.
inline double joint_moment(const ErrorSampleSet& s, int coord, int brownian) {
  double acc = 0.0;
  for (int i = 0; i < s.paths(); ++i) acc += s.driver(i, brownian) * s.samples(i, coord);
  return acc / s.paths();
}

/// Closed-form predictable bracket of the source martingale,
///   ⟨M^{j,N}⟩_t = N²/12 (⌊Nt/T⌋ T³/N³ + (t − τ̂_t)³),
/// with the floor guarded so that t = t_k counts k full intervals. Evaluated
/// as t_k T²/12 + N² r³/12, which is the same expression regrouped.
inline double bracket_mn(double t, int steps, double horizon) {
  if (!(horizon > 0.0) || steps < 1 || !(t >= 0.0) || t > horizon) {
    throw DomainError("bracket_mn: need 0 <= t <= T, N >= 1 and T > 0 (t=" + std::to_string(t) +
                      ", N=" + std::to_string(steps) + ", T=" + std::to_string(horizon) + ")");
  }
  const double nd = static_cast<double>(steps);
  const double full = std::min(std::floor(t / horizon * nd + 1e-12 * nd), nd);
  const double last = full * horizon / nd;
  const double rem = std::max(t - last, 0.0);
  return last * horizon * horizon / 12.0 + nd * nd * rem * rem * rem / 12.0;
}

}  // namespace nvsplit

#endif  // NVSPLIT_ERRORLAB_HPP
