#ifndef NVSPLIT_MODEL_HPP
#define NVSPLIT_MODEL_HPP

#include <nvsplit/paths.hpp>
#include <nvsplit/vecfield.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <functional>
#include <string>
#include <vector>

namespace nvsplit {

/// Itô SDE dX = b(X) dt + Σ_j σ^j(X) dW^j on [0, T], X_0 = x0.
struct SdeModel {
  /// Pathwise exact solution at the grid times of a path; rows are times.
  using ExactFn = std::function<Eigen::MatrixXd(const BrownianPath&)>;

  std::string name;
  VectorField drift;
  std::vector<VectorField> diffusion;
  double horizon = 1.0;
  Vec x0;
  ExactFn exact;

  int n() const { return drift.dim(); }
  int d() const { return static_cast<int>(diffusion.size()); }

  void validate() const {
    if (drift.dim() < 1) throw ConfigError("model '" + name + "': drift is not set");
    require_dim(x0.size(), n(), "model initial state");
    for (const auto& s : diffusion) require_dim(s.dim(), n(), "model diffusion field");
    if (!(horizon > 0.0)) throw ConfigError("model '" + name + "': horizon must be positive");
    if (!x0.allFinite()) throw ConfigError("model '" + name + "': initial state is not finite");
  }
};

/// σ⁰ = b − ½ Σ_j ∂σ^j σ^j. Carries an analytic Jacobian when b and every σ^j
/// have analytic first and second derivatives, and an affine form when all
/// fields are affine.
inline VectorField stratonovich_drift(const SdeModel& model) {
  model.validate();
  const auto& sig = model.diffusion;
  const bool constant_noise = std::all_of(sig.begin(), sig.end(), [](const VectorField& s) {
    return s.affine_form() && s.affine_form()->is_constant();
  });
  if (constant_noise) return model.drift.with_label("strat(" + model.drift.label() + ")");

  const VectorField b = model.drift;
  VectorField out(
      model.n(),
      [b, sig](const Vec& x) -> Vec {
        Vec corr = Vec::Zero(x.size());
        for (const auto& s : sig) corr += jacobian(s, x) * s(x);
        return b(x) - 0.5 * corr;
      },
      "strat(" + b.label() + ")");

  const bool analytic = b.has_jacobian() && std::all_of(sig.begin(), sig.end(), [](const VectorField& s) {
                          return s.has_jacobian() && s.has_hessian();
                        });
  if (analytic) {
    // ∂(∂σ σ) = (∂²σ ⊙ σ) + ∂σ ∂σ, using symmetry of ∂²σ in its last two indices.
    out = out.with_jacobian([b, sig](const Vec& x) -> Mat {
      Mat j = b.analytic_jacobian(x);
      for (const auto& s : sig) {
        const Mat js = s.analytic_jacobian(x);
        j -= 0.5 * (tensor_apply(s.analytic_hessian(x), s(x)) + js * js);
      }
      return j;
    });
  }

  const bool all_affine = b.affine_form().has_value() &&
                          std::all_of(sig.begin(), sig.end(), [](const VectorField& s) {
                            return s.affine_form().has_value();
                          });
  if (all_affine) {
    AffineForm form = *b.affine_form();
    for (const auto& s : sig) {
      const auto& f = *s.affine_form();
      form.A -= 0.5 * f.A * f.A;
      form.c -= 0.5 * f.A * f.c;
    }
    out = with_affine_form(out, std::move(form));
  }
  return out;
}

struct CommutativityReport {
  double max_brownian_bracket = 0.0;  ///< max ‖[σ^j, σ^m](x)‖ over j < m and points
  double max_drift_bracket = 0.0;     ///< max ‖[σ⁰, σ^j](x)‖ over j and points
  bool brownian_commute = true;
  bool drift_commutes = true;
  std::size_t points_checked = 0;
};

/// x0 plus `count` Halton points in the ball of radius `radius` around x0.
inline std::vector<Vec> default_probe_points(const SdeModel& model, int count = 64, double radius = 2.0) {
  static constexpr std::array<int, kMaxDim> primes{2, 3, 5, 7, 11, 13, 17};
  const int n = model.n();
  std::vector<Vec> pts{model.x0};
  auto radical_inverse = [](int base, long i) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
      f /= base;
      r += f * static_cast<double>(i % base);
      i /= base;
    }
    return r;
  };
  for (long i = 1; static_cast<int>(pts.size()) < count + 1; ++i) {
    Vec u(n);
    for (int k = 0; k < n; ++k) u[k] = 2.0 * radical_inverse(primes[static_cast<std::size_t>(k)], i) - 1.0;
    if (u.squaredNorm() <= 1.0) pts.push_back(model.x0 + radius * u);
  }
  return pts;
}

/// Sample-based check of the commutativity condition. A bracket counts as zero
/// at x when ‖[V,W](x)‖ ≤ rel_tol · (1 + max(‖V(x)‖, ‖W(x)‖)).
inline CommutativityReport check_commutativity(const SdeModel& model, const std::vector<Vec>& points,
                                               double rel_tol = 1e-9) {
  if (points.empty()) throw ConfigError("check_commutativity: no probe points");
  const VectorField sigma0 = stratonovich_drift(model);
  const auto& sig = model.diffusion;
  CommutativityReport rep;
  rep.points_checked = points.size();
  auto probe = [&](const VectorField& v, const VectorField& w, const Vec& x, double& max_norm, bool& flag) {
    const double norm = lie_bracket(v, w, x).norm();
    max_norm = std::max(max_norm, norm);
    if (norm > rel_tol * (1.0 + std::max(v(x).norm(), w(x).norm()))) flag = false;
  };
  for (const Vec& x : points) {
    for (int j = 0; j < model.d(); ++j) {
      for (int m = j + 1; m < model.d(); ++m) probe(sig[j], sig[m], x, rep.max_brownian_bracket, rep.brownian_commute);
      probe(sigma0, sig[j], x, rep.max_drift_bracket, rep.drift_commutes);
    }
  }
  return rep;
}

inline CommutativityReport check_commutativity(const SdeModel& model) {
  return check_commutativity(model, default_probe_points(model));
}

}  // namespace nvsplit

#endif  // NVSPLIT_MODEL_HPP
