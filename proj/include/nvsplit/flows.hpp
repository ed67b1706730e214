#ifndef NVSPLIT_FLOWS_HPP
#define NVSPLIT_FLOWS_HPP

#include <nvsplit/expm.hpp>
#include <nvsplit/vecfield.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace nvsplit {

enum class FlowKind { exact_constant, exact_linear, exact_affine, exact_scalar_geometric, numeric };

inline std::string_view to_string(FlowKind k) {
  switch (k) {
    case FlowKind::exact_constant: return "exact-constant";
    case FlowKind::exact_linear: return "exact-linear";
    case FlowKind::exact_affine: return "exact-affine";
    case FlowKind::exact_scalar_geometric: return "exact-scalar-geometric";
    case FlowKind::numeric: return "numeric";
  }
  return "?";
}

/// How exp(tV) is evaluated for one field. Exact kinds are validated against
/// the field's affine form at construction.
class FlowSpec {
 public:
  static constexpr int kNumericOrder = 4;

  /// RK4 with `substeps` steps. With a positive `t_ref` the substep length
  /// t_ref / substeps is fixed instead, and a flow over time t uses
  /// ceil(|t| / that length) substeps (at least one).
  static FlowSpec numeric(int substeps, double t_ref = 0.0) {
    if (substeps < 1) throw ConfigError("FlowSpec: numeric_substeps must be at least 1");
    if (!(t_ref >= 0.0) || !std::isfinite(t_ref)) throw ConfigError("FlowSpec: reference time must be finite and >= 0");
    FlowSpec s(FlowKind::numeric, substeps);
    s.t_ref_ = t_ref;
    return s;
  }

  static FlowSpec exact(FlowKind kind, const VectorField& field) {
    if (kind == FlowKind::numeric) throw ConfigError("FlowSpec::exact: numeric is not an exact kind");
    const auto& form = field.affine_form();
    auto reject = [&](const char* why) {
      throw ConfigError("FlowSpec: " + std::string(to_string(kind)) + " flow cannot attach to field '" +
                        field.label() + "': " + why);
    };
    if (!form) reject("field has no affine form");
    switch (kind) {
      case FlowKind::exact_constant:
        if (!form->is_constant()) reject("field is not constant");
        break;
      case FlowKind::exact_linear:
        if (!form->is_linear()) reject("field has a constant term");
        break;
      case FlowKind::exact_scalar_geometric:
        if (field.dim() != 1 || !form->is_linear()) reject("field is not V(x) = a x in one dimension");
        break;
      default:
        break;
    }
    return FlowSpec(kind, 1);
  }

  /// Most specific closed form the field admits, else numeric with `substeps`.
  static FlowSpec best_for(const VectorField& field, int substeps = 1) {
    const auto& form = field.affine_form();
    if (!form) return numeric(substeps);
    if (form->is_constant()) return exact(FlowKind::exact_constant, field);
    if (form->is_linear()) {
      return exact(field.dim() == 1 ? FlowKind::exact_scalar_geometric : FlowKind::exact_linear, field);
    }
    return exact(FlowKind::exact_affine, field);
  }

  FlowKind kind() const { return kind_; }
  int numeric_substeps() const { return substeps_; }
  bool is_exact() const { return kind_ != FlowKind::numeric; }
  double reference_time() const { return t_ref_; }

  int substeps_for(double t) const {
    if (t_ref_ <= 0.0) return substeps_;
    return std::max(1, static_cast<int>(std::ceil(std::abs(t) * substeps_ / t_ref_)));
  }

 private:
  FlowSpec(FlowKind kind, int substeps) : kind_(kind), substeps_(substeps) {}

  FlowKind kind_;
  int substeps_;
  double t_ref_ = 0.0;
};

namespace detail {

inline Vec rk4(const VectorField& v, double t, const Vec& x0, int substeps) {
  const double h = t / substeps;
  Vec x = x0;
  for (int i = 0; i < substeps; ++i) {
    const Vec k1 = v(x);
    const Vec k2 = v(x + 0.5 * h * k1);
    const Vec k3 = v(x + 0.5 * h * k2);
    const Vec k4 = v(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

inline const AffineForm& require_form(const VectorField& v) {
  if (!v.affine_form()) throw ConfigError("flow: exact flow requested for non-affine field '" + v.label() + "'");
  return *v.affine_form();
}

}  // namespace detail

/// exp(tV) x0: the solution at time t (any sign) of dx/dt = V(x), x(0) = x0.
inline Vec flow(const VectorField& v, const FlowSpec& spec, double t, const Vec& x0) {
  if (!std::isfinite(t) || !x0.allFinite()) throw NumericalFailure("flow: non-finite time or initial state");
  require_dim(x0.size(), v.dim(), "flow");
  Vec out;
  switch (spec.kind()) {
    case FlowKind::exact_constant:
      out = x0 + t * detail::require_form(v).c;
      break;
    case FlowKind::exact_scalar_geometric:
      out = x0 * std::exp(detail::require_form(v).A(0, 0) * t);
      break;
    case FlowKind::exact_linear:
      out = expm(t * detail::require_form(v).A) * x0;
      break;
    case FlowKind::exact_affine: {
      // exp(t [[A, c], [0, 0]]) = [[e^{tA}, ∫₀ᵗ e^{sA} ds c], [0, 1]] covers singular A.
      const auto& f = detail::require_form(v);
      const auto n = x0.size();
      Mat aug = Mat::Zero(n + 1, n + 1);
      aug.topLeftCorner(n, n) = t * f.A;
      aug.topRightCorner(n, 1) = t * f.c;
      const Mat e = expm(aug);
      out = e.topLeftCorner(n, n) * x0 + e.topRightCorner(n, 1);
      break;
    }
    case FlowKind::numeric:
      out = detail::rk4(v, t, x0, spec.substeps_for(t));
      break;
  }
  if (!out.allFinite() || out.norm() > 1e300) {
    throw NumericalFailure("flow: overflow along field '" + v.label() + "' at time " + std::to_string(t));
  }
  return out;
}

/// Richardson estimate of the worst numeric flow error over samples and
/// t ∈ {t_max, −t_max}: twice ‖y_s − y_{2s}‖, where y_s uses the spec's substeps.
inline double flow_error_budget(const VectorField& v, const FlowSpec& spec, double t_max,
                                const std::vector<Vec>& x_samples) {
  if (spec.is_exact()) return 0.0;
  const FlowSpec doubled = FlowSpec::numeric(2 * spec.numeric_substeps(), spec.reference_time());
  double worst = 0.0;
  for (const Vec& x : x_samples) {
    for (double t : {t_max, -t_max}) {
      worst = std::max(worst, 2.0 * (flow(v, spec, t, x) - flow(v, doubled, t, x)).norm());
    }
  }
  return worst;
}

/// Smallest power-of-two substep count over t_max whose budget is below
/// rel_target · max(1, max ‖x‖); the resulting substep length is kept for
/// shorter flow times. Exact kinds are returned unchanged.
inline FlowSpec calibrate_flow(const VectorField& v, double t_max, const std::vector<Vec>& x_samples,
                               double rel_target = 1e-12, int max_substeps = 1 << 12) {
  const FlowSpec best = FlowSpec::best_for(v);
  if (best.is_exact()) return best;
  double scale = 1.0;
  for (const Vec& x : x_samples) scale = std::max(scale, x.norm());
  int s = 1;
  while (s < max_substeps && flow_error_budget(v, FlowSpec::numeric(s, t_max), t_max, x_samples) > rel_target * scale) {
    s *= 2;
  }
  return FlowSpec::numeric(s, t_max);
}

}  // namespace nvsplit

#endif  // NVSPLIT_FLOWS_HPP
