#ifndef NVSPLIT_SCHEMES_HPP
#define NVSPLIT_SCHEMES_HPP

#include <nvsplit/flows.hpp>
#include <nvsplit/model.hpp>
#include <nvsplit/paths.hpp>

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nvsplit {

enum class Scheme { euler, milstein, nv_eta, nv_commuting, reference };

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::euler: return "euler";
    case Scheme::milstein: return "milstein";
    case Scheme::nv_eta: return "nv-eta";
    case Scheme::nv_commuting: return "nv";
    case Scheme::reference: return "reference";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view name) {
  if (name == "euler") return Scheme::euler;
  if (name == "milstein") return Scheme::milstein;
  if (name == "nv-eta") return Scheme::nv_eta;
  if (name == "nv" || name == "nv-commuting") return Scheme::nv_commuting;
  if (name == "reference") return Scheme::reference;
  throw ConfigError("unknown scheme '" + std::string(name) +
                    "' (expected euler, milstein, nv, nv-commuting, nv-eta or reference)");
}

/// Scheme output at the grid times; row k is the state at t_k.
struct Trajectory {
  TimeGrid grid{1.0, 1};
  Eigen::MatrixXd states;
  std::string scheme;
  std::vector<std::string> warnings;

  Vec state(int k) const { return states.row(k).transpose(); }
  Vec terminal() const { return state(grid.steps()); }
};

struct FlowOptions {
  int numeric_substeps = 0;  ///< 0: calibrate against rel_target
  double rel_target = 1e-12;
  int coarsest_steps = 1;    ///< sets the longest flow times used for calibration
};

/// A model together with everything the integrators derive from it once:
/// the Stratonovich drift, per-field flow specs and a commutativity report.
class PreparedModel {
 public:
  explicit PreparedModel(SdeModel model, FlowOptions opts = {})
      : model_(std::move(model)), sigma0_(stratonovich_drift(model_)),
        drift_flow_(FlowSpec::best_for(sigma0_)), commute_(check_commutativity(model_)) {
    std::vector<Vec> samples = default_probe_points(model_, 8);
    const double h = model_.horizon / std::max(1, opts.coarsest_steps);
    auto spec_for = [&](const VectorField& f, double t_max) {
      if (opts.numeric_substeps > 0) return FlowSpec::best_for(f, opts.numeric_substeps);
      return calibrate_flow(f, t_max, samples, opts.rel_target);
    };
    drift_flow_ = spec_for(sigma0_, 0.5 * h);
    for (const auto& s : model_.diffusion) noise_flows_.push_back(spec_for(s, 5.0 * std::sqrt(h)));
  }

  const SdeModel& model() const { return model_; }
  const VectorField& strat_drift() const { return sigma0_; }
  const FlowSpec& drift_flow() const { return drift_flow_; }
  const FlowSpec& noise_flow(int j) const { return noise_flows_[static_cast<std::size_t>(j)]; }
  const CommutativityReport& commutativity() const { return commute_; }

  int n() const { return model_.n(); }
  int d() const { return model_.d(); }

 private:
  SdeModel model_;
  VectorField sigma0_;
  FlowSpec drift_flow_;
  std::vector<FlowSpec> noise_flows_;
  CommutativityReport commute_;
};

namespace detail {

inline BrownianPath path_on(const BrownianPath& path, const TimeGrid& grid, int d) {
  if (path.grid.horizon() != grid.horizon()) {
    throw ConfigError("path horizon " + std::to_string(path.grid.horizon()) + " differs from grid horizon " +
                      std::to_string(grid.horizon()));
  }
  if (path.d != d) throw DimensionError("path has " + std::to_string(path.d) + " Brownian components, model " + std::to_string(d));
  if (path.grid.steps() == grid.steps()) return path;
  return coarsen(path, grid.steps());
}

inline void check_state(const Vec& x, const char* scheme, int k) {
  if (!x.allFinite() || x.norm() > 1e300) {
    throw NumericalFailure(std::string(scheme) + ": overflow at step " + std::to_string(k));
  }
}

inline Trajectory start(const PreparedModel& pm, const TimeGrid& grid, std::string_view tag) {
  Trajectory tr;
  tr.grid = grid;
  tr.scheme = std::string(tag);
  tr.states.resize(grid.steps() + 1, pm.n());
  tr.states.row(0) = pm.model().x0.transpose();
  return tr;
}

inline Vec nv_step(const PreparedModel& pm, const Vec& x, double h, const Eigen::MatrixXd& dw, int k, int eta) {
  const int d = pm.d();
  Vec y = flow(pm.strat_drift(), pm.drift_flow(), 0.5 * h, x);
  for (int i = 0; i < d; ++i) {
    const int j = eta > 0 ? i : d - 1 - i;
    y = flow(pm.model().diffusion[static_cast<std::size_t>(j)], pm.noise_flow(j), dw(j, k), y);
  }
  return flow(pm.strat_drift(), pm.drift_flow(), 0.5 * h, y);
}

}  // namespace detail

/// X_{k+1} = X_k + b(X_k) h + Σ_j σ^j(X_k) ΔW^j.
inline Trajectory simulate_euler(const PreparedModel& pm, const TimeGrid& grid, const BrownianPath& path) {
  const BrownianPath p = detail::path_on(path, grid, pm.d());
  Trajectory tr = detail::start(pm, grid, "euler");
  const auto& m = pm.model();
  const double h = grid.step();
  Vec x = m.x0;
  for (int k = 0; k < grid.steps(); ++k) {
    Vec next = x + h * m.drift(x);
    for (int j = 0; j < pm.d(); ++j) next += p.increments(j, k) * m.diffusion[static_cast<std::size_t>(j)](x);
    detail::check_state(next, "euler", k);
    x = next;
    tr.states.row(k + 1) = x.transpose();
  }
  return tr;
}

/// Milstein with the commutative reduction of the iterated integrals:
/// correction ½ Σ_{j,m} ∂σ^m σ^j (ΔW^j ΔW^m − δ_{jm} h).
inline Trajectory simulate_milstein(const PreparedModel& pm, const TimeGrid& grid, const BrownianPath& path) {
  if (pm.d() > 1 && !pm.commutativity().brownian_commute) {
    throw UnsupportedModel("milstein: model '" + pm.model().name +
                           "' has non-commuting Brownian fields; Lévy areas are not simulated");
  }
  const BrownianPath p = detail::path_on(path, grid, pm.d());
  Trajectory tr = detail::start(pm, grid, "milstein");
  const auto& m = pm.model();
  const double h = grid.step();
  const int d = pm.d();
  Vec x = m.x0;
  std::vector<Vec> sig(static_cast<std::size_t>(d));
  std::vector<Mat> jac(static_cast<std::size_t>(d));
  for (int k = 0; k < grid.steps(); ++k) {
    Vec next = x + h * m.drift(x);
    for (int j = 0; j < d; ++j) {
      sig[j] = m.diffusion[j](x);
      jac[j] = jacobian(m.diffusion[j], x);
      next += p.increments(j, k) * sig[j];
    }
    for (int j = 0; j < d; ++j) {
      for (int q = 0; q < d; ++q) {
        const double iterated = p.increments(j, k) * p.increments(q, k) - (j == q ? h : 0.0);
        next += 0.5 * iterated * (jac[q] * sig[j]);
      }
    }
    detail::check_state(next, "milstein", k);
    x = next;
    tr.states.row(k + 1) = x.transpose();
  }
  return tr;
}

/// Ninomiya-Victoir step: half drift flow, Brownian flows for signed time
/// ΔW^j (σ¹..σ^d when η = +1, σ^d..σ¹ when η = −1), half drift flow.
inline Trajectory simulate_nv(const PreparedModel& pm, const TimeGrid& grid, const BrownianPath& path,
                              const RademacherSeq& eta) {
  if (static_cast<int>(eta.values.size()) < grid.steps()) {
    throw ConfigError("simulate_nv: Rademacher sequence shorter than the grid");
  }
  const BrownianPath p = detail::path_on(path, grid, pm.d());
  Trajectory tr = detail::start(pm, grid, "nv-eta");
  const double h = grid.step();
  Vec x = pm.model().x0;
  for (int k = 0; k < grid.steps(); ++k) {
    x = detail::nv_step(pm, x, h, p.increments, k, eta.at_step(k));
    tr.states.row(k + 1) = x.transpose();
  }
  return tr;
}

/// Fixed ascending composition order every step; meant for models whose
/// Brownian fields commute (a warning is attached otherwise).
inline Trajectory simulate_nv_commuting(const PreparedModel& pm, const TimeGrid& grid, const BrownianPath& path) {
  const BrownianPath p = detail::path_on(path, grid, pm.d());
  Trajectory tr = detail::start(pm, grid, "nv");
  if (!pm.commutativity().brownian_commute) {
    tr.warnings.push_back("Brownian fields of '" + pm.model().name + "' do not commute; fixed-order NV is biased");
  }
  const double h = grid.step();
  Vec x = pm.model().x0;
  for (int k = 0; k < grid.steps(); ++k) {
    x = detail::nv_step(pm, x, h, p.increments, k, +1);
    tr.states.row(k + 1) = x.transpose();
  }
  return tr;
}

inline Trajectory subsample(const Trajectory& fine, int steps) {
  const int levels = dyadic_levels(fine.grid.steps(), steps);
  const int stride = 1 << levels;
  Trajectory out;
  out.grid = TimeGrid(fine.grid.horizon(), steps);
  out.scheme = fine.scheme;
  out.warnings = fine.warnings;
  out.states.resize(steps + 1, fine.states.cols());
  for (int k = 0; k <= steps; ++k) out.states.row(k) = fine.states.row(k * stride);
  return out;
}

struct RefConfig {
  int refinement = 16;  ///< reference grid is this many times finer than the coarse grid
  int safety = 2;       ///< extra factor the Brownian path carries for the r vs 2r gate
  int gate_paths = 32;  ///< paths used by the self-consistency gate
};

inline void validate(const RefConfig& cfg) {
  if (cfg.refinement < 2 || !std::has_single_bit(static_cast<unsigned>(cfg.refinement))) {
    throw ConfigError("reference refinement must be a power of two >= 2, got " + std::to_string(cfg.refinement));
  }
  if (cfg.safety < 1 || !std::has_single_bit(static_cast<unsigned>(cfg.safety))) {
    throw ConfigError("reference safety factor must be a power of two >= 1");
  }
}

/// Pathwise reference on grid_coarse: the model's exact solution when it has
/// one, otherwise fixed-order NV on the `refinement`-times finer grid driven by
/// the same Brownian path, subsampled to the coarse grid.
inline Trajectory reference_solution(const PreparedModel& pm, const TimeGrid& grid_coarse, const BrownianPath& path,
                                     const RefConfig& cfg) {
  validate(cfg);
  const auto& m = pm.model();
  if (m.exact) {
    const BrownianPath p = detail::path_on(path, grid_coarse, pm.d());
    Trajectory tr;
    tr.grid = grid_coarse;
    tr.scheme = "exact";
    tr.states = m.exact(p);
    return tr;
  }
  const long fine_steps = long(grid_coarse.steps()) * cfg.refinement;
  if (fine_steps > path.grid.steps()) {
    throw ConfigError("reference_solution: path has " + std::to_string(path.grid.steps()) + " steps, need " +
                      std::to_string(fine_steps));
  }
  const TimeGrid fine(grid_coarse.horizon(), static_cast<int>(fine_steps));
  Trajectory tr = subsample(simulate_nv_commuting(pm, fine, path), grid_coarse.steps());
  tr.scheme = "reference";
  return tr;
}

}  // namespace nvsplit

#endif  // NVSPLIT_SCHEMES_HPP
