#ifndef NVSPLIT_REGISTRY_HPP
#define NVSPLIT_REGISTRY_HPP

#include <nvsplit/model.hpp>

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nvsplit {

using ParamMap = std::map<std::string, double>;

/// Built-in models:
///   bs               dX = μX dt + σX dW                   (mu, sigma; exact solution)
///   additive-sin     dX = sin(X) dt + dW                  ([σ⁰,σ¹] = −cos x)
///   noncommuting-2d  dX¹ = dW¹, dX² = X¹ dW²              ([σ¹,σ²] = (0, 1))
///   linear-1d        dX = αX dt + dW                      (alpha)
///   constant         dX = c⁰ dt + c¹ dW¹ + c² dW²         (exact solution)
inline const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"bs", "additive-sin", "noncommuting-2d", "linear-1d", "constant"};
  return names;
}

inline ParamMap default_params(const std::string& name) {
  if (name == "bs") return {{"mu", 0.5}, {"sigma", 0.8}};
  if (name == "additive-sin") return {};
  if (name == "noncommuting-2d") return {};
  if (name == "linear-1d") return {{"alpha", 1.0}};
  if (name == "constant") {
    return {{"b1", 0.3}, {"b2", -0.2}, {"s1_1", 1.0}, {"s1_2", 0.5}, {"s2_1", -0.4}, {"s2_2", 0.8}};
  }
  throw ConfigError("unknown model '" + name + "'");
}

inline Vec default_x0(const std::string& name) {
  if (name == "noncommuting-2d" || name == "constant") return Vec::Constant(2, 1.0);
  if (name == "bs" || name == "additive-sin" || name == "linear-1d") return Vec::Constant(1, 1.0);
  throw ConfigError("unknown model '" + name + "'");
}

/// Defaults overlaid with `overrides`; unknown keys are rejected.
inline ParamMap resolve_params(const std::string& name, const ParamMap& overrides) {
  ParamMap p = default_params(name);
  for (const auto& [k, v] : overrides) {
    if (!p.contains(k)) throw ConfigError("model '" + name + "' has no parameter '" + k + "'");
    if (!std::isfinite(v)) throw ConfigError("model parameter '" + k + "' is not finite");
    p[k] = v;
  }
  return p;
}

namespace detail {

inline Vec vec_of(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Mat scalar_mat(double a) { return Mat::Constant(1, 1, a); }

}  // namespace detail

inline SdeModel make_model(const std::string& name, const ParamMap& overrides = {},
                           std::optional<double> horizon = std::nullopt, std::optional<Vec> x0 = std::nullopt) {
  const ParamMap p = resolve_params(name, overrides);
  SdeModel m;
  m.name = name;
  m.horizon = horizon.value_or(1.0);
  m.x0 = x0.value_or(default_x0(name));

  if (name == "bs") {
    const double mu = p.at("mu"), sigma = p.at("sigma");
    m.drift = VectorField::linear(detail::scalar_mat(mu), "mu*x");
    m.diffusion = {VectorField::linear(detail::scalar_mat(sigma), "sigma*x")};
    const Vec start = m.x0;
    m.exact = [mu, sigma, start](const BrownianPath& path) {
      const Eigen::MatrixXd w = path.values();
      Eigen::MatrixXd out(path.grid.steps() + 1, 1);
      for (int k = 0; k <= path.grid.steps(); ++k) {
        out(k, 0) = start[0] * std::exp((mu - 0.5 * sigma * sigma) * path.grid.time(k) + sigma * w(0, k));
      }
      return out;
    };
  } else if (name == "additive-sin") {
    m.drift = VectorField(
                  1, [](const Vec& x) -> Vec { return x.array().sin().matrix(); }, "sin(x)")
                  .with_jacobian([](const Vec& x) -> Mat { return detail::scalar_mat(std::cos(x[0])); })
                  .with_hessian([](const Vec& x) {
                    Tensor3 h(1, 1, 1);
                    h(0, 0, 0) = -std::sin(x[0]);
                    return h;
                  });
    m.diffusion = {VectorField::constant(detail::vec_of({1.0}), "1")};
  } else if (name == "noncommuting-2d") {
    Mat a = Mat::Zero(2, 2);
    a(1, 0) = 1.0;
    m.drift = VectorField::constant(Vec::Zero(2), "0");
    m.diffusion = {VectorField::constant(detail::vec_of({1.0, 0.0}), "(1,0)"),
                   VectorField::linear(a, "(0,x1)")};
  } else if (name == "linear-1d") {
    m.drift = VectorField::linear(detail::scalar_mat(p.at("alpha")), "alpha*x");
    m.diffusion = {VectorField::constant(detail::vec_of({1.0}), "1")};
  } else if (name == "constant") {
    const Vec c0 = detail::vec_of({p.at("b1"), p.at("b2")});
    const Vec c1 = detail::vec_of({p.at("s1_1"), p.at("s1_2")});
    const Vec c2 = detail::vec_of({p.at("s2_1"), p.at("s2_2")});
    m.drift = VectorField::constant(c0, "c0");
    m.diffusion = {VectorField::constant(c1, "c1"), VectorField::constant(c2, "c2")};
    const Vec start = m.x0;
    m.exact = [c0, c1, c2, start](const BrownianPath& path) {
      const Eigen::MatrixXd w = path.values();
      Eigen::MatrixXd out(path.grid.steps() + 1, 2);
      for (int k = 0; k <= path.grid.steps(); ++k) {
        const Vec x = start + path.grid.time(k) * c0 + w(0, k) * c1 + w(1, k) * c2;
        out.row(k) = x.transpose();
      }
      return out;
    };
  }
  m.validate();
  return m;
}

}  // namespace nvsplit

#endif  // NVSPLIT_REGISTRY_HPP
