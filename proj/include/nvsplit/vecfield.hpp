#ifndef NVSPLIT_VECFIELD_HPP
#define NVSPLIT_VECFIELD_HPP

#include <nvsplit/core.hpp>

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nvsplit {

/// Dense rank-3 array indexed (i, k, l), row-major in l.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int m, int p, int q) : m_(m), p_(p), q_(q), data_(std::size_t(m) * p * q, 0.0) {}

  int dim0() const { return m_; }
  int dim1() const { return p_; }
  int dim2() const { return q_; }

  double& operator()(int i, int k, int l) { return data_[(std::size_t(i) * p_ + k) * q_ + l]; }
  double operator()(int i, int k, int l) const {
    return data_[(std::size_t(i) * p_ + k) * q_ + l];
  }

 private:
  int m_ = 0, p_ = 0, q_ = 0;
  std::vector<double> data_;
};

/// (A ⊙ v)_{i,k} = Σ_l A(i,k,l) v_l.
inline Mat tensor_apply(const Tensor3& a, const Vec& v) {
  if (a.dim2() != v.size()) {
    throw DimensionError("tensor_apply: trailing dimension " + std::to_string(a.dim2()) +
                         " does not match vector length " + std::to_string(v.size()));
  }
  if (a.dim0() > kMaxAug || a.dim1() > kMaxAug) {
    throw DimensionError("tensor_apply: result exceeds matrix capacity");
  }
  Mat out = Mat::Zero(a.dim0(), a.dim1());
  for (int i = 0; i < a.dim0(); ++i) {
    for (int k = 0; k < a.dim1(); ++k) {
      double s = 0.0;
      for (int l = 0; l < a.dim2(); ++l) s += a(i, k, l) * v[l];
      out(i, k) = s;
    }
  }
  return out;
}

/// V(x) = A x + c. Carried alongside the callable so flows can use closed forms.
struct AffineForm {
  Mat A;
  Vec c;

  bool is_constant() const { return A.isZero(0.0); }
  bool is_linear() const { return c.isZero(0.0); }
};

/// A smooth vector field on R^n with optional analytic first and second
/// derivatives. Jacobian convention: J(i, k) = ∂_{x_k} V^i. Hessian convention:
/// H(i, k, l) = ∂²_{x_l x_k} V^i.
class VectorField {
 public:
  using EvalFn = std::function<Vec(const Vec&)>;
  using JacFn = std::function<Mat(const Vec&)>;
  using HessFn = std::function<Tensor3(const Vec&)>;

  VectorField() = default;
  VectorField(int dim, EvalFn eval, std::string label = {})
      : dim_(dim), eval_(std::move(eval)), label_(std::move(label)) {
    if (dim < 1 || dim > kMaxDim) {
      throw DimensionError("VectorField: dimension must lie in [1, " + std::to_string(kMaxDim) +
                           "], got " + std::to_string(dim));
    }
  }

  VectorField with_jacobian(JacFn jac) const {
    VectorField out = *this;
    out.jac_ = std::move(jac);
    return out;
  }
  VectorField with_hessian(HessFn hess) const {
    VectorField out = *this;
    out.hess_ = std::move(hess);
    return out;
  }
  VectorField with_label(std::string label) const {
    VectorField out = *this;
    out.label_ = std::move(label);
    return out;
  }

  static VectorField affine(const Mat& a, const Vec& c, std::string label = {}) {
    const int n = static_cast<int>(c.size());
    require_dim(a.rows(), n, "VectorField::affine rows");
    require_dim(a.cols(), n, "VectorField::affine cols");
    VectorField f(
        n, [a, c](const Vec& x) -> Vec { return a * x + c; }, std::move(label));
    f.jac_ = [a](const Vec&) -> Mat { return a; };
    f.hess_ = [n](const Vec&) { return Tensor3(n, n, n); };
    f.affine_ = AffineForm{a, c};
    return f;
  }
  static VectorField linear(const Mat& a, std::string label = {}) {
    return affine(a, Vec::Zero(a.rows()), std::move(label));
  }
  static VectorField constant(const Vec& c, std::string label = {}) {
    return affine(Mat::Zero(c.size(), c.size()), c, std::move(label));
  }

  int dim() const { return dim_; }
  const std::string& label() const { return label_; }

  Vec operator()(const Vec& x) const { return eval_(x); }

  bool has_jacobian() const { return static_cast<bool>(jac_); }
  bool has_hessian() const { return static_cast<bool>(hess_); }
  Mat analytic_jacobian(const Vec& x) const { return jac_(x); }
  Tensor3 analytic_hessian(const Vec& x) const { return hess_(x); }

  const std::optional<AffineForm>& affine_form() const { return affine_; }

 private:
  friend VectorField with_affine_form(VectorField f, AffineForm form);

  int dim_ = 0;
  EvalFn eval_;
  JacFn jac_;
  HessFn hess_;
  std::optional<AffineForm> affine_;
  std::string label_;
};

/// Attaches a known affine structure to a field built from a generic callable.
inline VectorField with_affine_form(VectorField f, AffineForm form) {
  require_dim(form.c.size(), f.dim(), "with_affine_form");
  f.affine_ = std::move(form);
  return f;
}

namespace detail {

inline void check_finite(const Vec& v, const char* what, int coord) {
  if (!v.allFinite()) {
    throw NumericalFailure(std::string(what) + ": non-finite evaluation while perturbing coordinate " +
                           std::to_string(coord));
  }
}

inline double fd_step(double eps_root, double xk) {
  return eps_root * std::max(1.0, std::abs(xk));
}

}  // namespace detail

/// Central finite-difference Jacobian with step cbrt(ε)·max(1, |x_k|).
inline Mat fd_jacobian(const VectorField& field, const Vec& x) {
  const int n = field.dim();
  require_dim(x.size(), n, "jacobian");
  static const double root = std::cbrt(std::numeric_limits<double>::epsilon());
  Mat jac(n, n);
  for (int k = 0; k < n; ++k) {
    Vec xp = x, xm = x;
    const double h = detail::fd_step(root, x[k]);
    xp[k] += h;
    xm[k] -= h;
    const Vec fp = field(xp);
    const Vec fm = field(xm);
    detail::check_finite(fp, "jacobian", k);
    detail::check_finite(fm, "jacobian", k);
    jac.col(k) = (fp - fm) / (xp[k] - xm[k]);
  }
  return jac;
}

inline Mat jacobian(const VectorField& field, const Vec& x) {
  if (!x.allFinite()) throw NumericalFailure("jacobian: non-finite evaluation point");
  if (field.has_jacobian()) {
    require_dim(x.size(), field.dim(), "jacobian");
    return field.analytic_jacobian(x);
  }
  return fd_jacobian(field, x);
}

/// Second derivatives: analytic if supplied, else central differences of the
/// Jacobian with step ε^{1/4}·max(1, |x_l|).
inline Tensor3 hessian(const VectorField& field, const Vec& x) {
  const int n = field.dim();
  require_dim(x.size(), n, "hessian");
  if (field.has_hessian()) return field.analytic_hessian(x);
  static const double root = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
  Tensor3 h(n, n, n);
  for (int l = 0; l < n; ++l) {
    Vec xp = x, xm = x;
    const double step = detail::fd_step(root, x[l]);
    xp[l] += step;
    xm[l] -= step;
    const Mat d = (jacobian(field, xp) - jacobian(field, xm)) / (xp[l] - xm[l]);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) h(i, k, l) = d(i, k);
  }
  return h;
}

/// [V, W](x) = ∂W(x) V(x) − ∂V(x) W(x).
inline Vec lie_bracket(const VectorField& v, const VectorField& w, const Vec& x) {
  if (v.dim() != w.dim()) {
    throw DimensionError("lie_bracket: fields '" + v.label() + "' (dim " + std::to_string(v.dim()) +
                         ") and '" + w.label() + "' (dim " + std::to_string(w.dim()) + ") differ");
  }
  require_dim(x.size(), v.dim(), "lie_bracket");
  return jacobian(w, x) * v(x) - jacobian(v, x) * w(x);
}

}  // namespace nvsplit

#endif  // NVSPLIT_VECFIELD_HPP
