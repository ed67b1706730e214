#include "support.hpp"

#include <gtest/gtest.h>

#include <limits>

namespace nvsplit {
namespace {

using testing::oracle_jacobian;

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

VectorField product_field() {
  return VectorField(2, [](const Vec& x) -> Vec { return v2(x[0] * x[1], x[1] * x[1]); }, "(x1x2,x2^2)");
}

TEST(Jacobian, ConstantFieldIsZero) {
  const auto f = VectorField(2, [](const Vec&) -> Vec { return v2(3.0, -1.0); });
  EXPECT_TRUE(jacobian(f, v2(0.3, 7.0)).isZero(0.0));
}

TEST(Jacobian, LinearFieldReturnsMatrix) {
  Mat a(2, 2);
  a << 0, 1, -1, 0;
  const auto generic = VectorField(2, [a](const Vec& x) -> Vec { return a * x; });
  EXPECT_LT((jacobian(generic, v2(3, 5)) - a).norm(), 1e-9);
  EXPECT_EQ(jacobian(VectorField::linear(a), v2(3, 5)), a);
}

TEST(Jacobian, ProductFieldMatchesHandDerivativeAndOracle) {
  Mat want(2, 2);
  want << 3, 2, 0, 6;
  const auto f = product_field();
  const Mat got = jacobian(f, v2(2, 3));
  EXPECT_LT((got - want).norm(), 1e-8);
  EXPECT_LT((oracle_jacobian([&](const Vec& x) { return f(x); }, v2(2, 3)) - want).norm(), 1e-9);
}

TEST(Jacobian, NonFiniteEvaluationNamesCoordinate) {
  const auto f = VectorField(2, [](const Vec& x) -> Vec {
    return v2(x[0], x[1] > 5.0 ? std::numeric_limits<double>::quiet_NaN() : x[1]);
  });
  try {
    jacobian(f, v2(0.0, 5.0));
    FAIL() << "expected NumericalFailure";
  } catch (const NumericalFailure& e) {
    EXPECT_NE(std::string(e.what()).find("coordinate 1"), std::string::npos) << e.what();
  }
}

TEST(Hessian, FiniteDifferenceAgreesWithAnalytic) {
  testing::Gen g(5);
  for (int rep = 0; rep < 20; ++rep) {
    const auto q = g.quadratic(3).field();
    const auto plain = VectorField(3, [q](const Vec& x) { return q(x); }).with_jacobian([q](const Vec& x) {
      return q.analytic_jacobian(x);
    });
    const Vec x = g.vec(3, 2.0);
    const Tensor3 exact = hessian(q, x), fd = hessian(plain, x);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          EXPECT_NEAR(fd(i, k, l), exact(i, k, l), 1e-4 * std::max(1.0, std::abs(exact(i, k, l))));
          EXPECT_NEAR(exact(i, k, l), exact(i, l, k), 1e-10);
        }
  }
}

TEST(LieBracket, SelfBracketVanishes) {
  const auto f = product_field();
  EXPECT_LT(lie_bracket(f, f, v2(1.3, -0.4)).norm(), 1e-12);
}

TEST(LieBracket, TranslationAndShear) {
  const auto v = VectorField::constant(v2(1, 0));
  Mat a = Mat::Zero(2, 2);
  a(1, 0) = 1.0;
  const auto w = VectorField::linear(a);
  for (const Vec& x : {v2(0, 0), v2(2, -3), v2(-1.5, 4)}) {
    EXPECT_EQ(lie_bracket(v, w, x), v2(0, 1));
  }
  // Finite-difference route for the same fields.
  const auto vf = VectorField(2, [](const Vec&) -> Vec { return v2(1, 0); });
  const auto wf = VectorField(2, [](const Vec& x) -> Vec { return v2(0, x[0]); });
  EXPECT_LT((lie_bracket(vf, wf, v2(0.7, 0.2)) - v2(0, 1)).norm(), 1e-9);
}

TEST(LieBracket, LinearFieldsGiveMatrixCommutator) {
  testing::Gen g(17);
  for (int rep = 0; rep < 25; ++rep) {
    const Mat a = g.mat(3), b = g.mat(3);
    const Vec x = g.vec(3, 2.0);
    const Vec want = (b * a - a * b) * x;
    EXPECT_LT((lie_bracket(VectorField::linear(a), VectorField::linear(b), x) - want).norm(), 1e-12);
    const auto fa = VectorField(3, [a](const Vec& y) -> Vec { return a * y; });
    const auto fb = VectorField(3, [b](const Vec& y) -> Vec { return b * y; });
    EXPECT_LT((lie_bracket(fa, fb, x) - want).norm(), 1e-7);
  }
}

TEST(LieBracket, DimensionMismatchThrows) {
  EXPECT_THROW(lie_bracket(VectorField::constant(v2(1, 0)), VectorField::constant(Vec::Ones(3)), v2(0, 0)),
               DimensionError);
}

TEST(TensorApply, Examples) {
  Tensor3 zero(2, 3, 4);
  EXPECT_TRUE(tensor_apply(zero, Vec::Ones(4)).isZero(0.0));

  Tensor3 a(2, 2, 2);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) a(i, k, l) = i + k + l;
  // Oracle: enumerate the 8 products.
  Mat want = Mat::Zero(2, 2);
  const double v[2] = {1, 2};
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) want(i, k) += (i + k + l) * v[l];
  Mat frozen(2, 2);
  frozen << 2, 5, 5, 8;
  EXPECT_EQ(want, frozen);
  EXPECT_EQ(tensor_apply(a, v2(1, 2)), frozen);

  for (int l = 0; l < 2; ++l) {
    const Mat slice = tensor_apply(a, Vec::Unit(2, l));
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k) EXPECT_EQ(slice(i, k), a(i, k, l));
  }
  EXPECT_THROW(tensor_apply(a, Vec::Ones(3)), DimensionError);
}

TEST(StratonovichDrift, ConstantDiffusionLeavesDrift) {
  const SdeModel m = make_model("additive-sin");
  const VectorField s0 = stratonovich_drift(m);
  for (double x : {-2.0, 0.0, 0.4, 3.0}) EXPECT_EQ(s0(Vec::Constant(1, x))[0], std::sin(x));
}

TEST(StratonovichDrift, GeometricBrownianMotion) {
  const SdeModel m = make_model("bs", {{"mu", 0.3}, {"sigma", 0.7}});
  const VectorField s0 = stratonovich_drift(m);
  for (double x : {-1.0, 0.5, 2.0}) {
    EXPECT_NEAR(s0(Vec::Constant(1, x))[0], (0.3 - 0.5 * 0.49) * x, 1e-15);
  }
  ASSERT_TRUE(s0.affine_form());
  EXPECT_NEAR(s0.affine_form()->A(0, 0), 0.3 - 0.245, 1e-16);
}

TEST(StratonovichDrift, PureNoiseCorrection) {
  SdeModel m;
  m.name = "x-noise";
  m.drift = VectorField::constant(Vec::Zero(1));
  m.diffusion = {VectorField(1, [](const Vec& x) { return x; }).with_jacobian([](const Vec&) -> Mat {
    return Mat::Identity(1, 1);
  })};
  m.x0 = Vec::Ones(1);
  const VectorField s0 = stratonovich_drift(m);
  for (double x : {-3.0, 1.0, 2.5}) EXPECT_DOUBLE_EQ(s0(Vec::Constant(1, x))[0], -0.5 * x);
}

TEST(StratonovichDrift, AnalyticJacobianMatchesFiniteDifferences) {
  testing::Gen g(99);
  for (int rep = 0; rep < 20; ++rep) {
    SdeModel m;
    m.name = "quad";
    m.drift = g.quadratic(2).field();
    m.diffusion = {g.quadratic(2, 0.3).field(), g.quadratic(2, 0.3).field()};
    m.x0 = g.vec(2);
    const VectorField s0 = stratonovich_drift(m);
    ASSERT_TRUE(s0.has_jacobian());
    const Vec x = g.vec(2);
    const Mat fd = oracle_jacobian([&](const Vec& y) { return s0(y); }, x);
    EXPECT_LT(testing::rel_err(s0.analytic_jacobian(x), fd), 1e-7);
  }
}

TEST(Commutativity, SingleBrownianFieldHasNoPairs) {
  const auto rep = check_commutativity(make_model("additive-sin"));
  EXPECT_TRUE(rep.brownian_commute);
  EXPECT_EQ(rep.max_brownian_bracket, 0.0);
  EXPECT_FALSE(rep.drift_commutes);  // [σ⁰, σ¹] = −cos x
  EXPECT_EQ(rep.points_checked, 65u);
}

TEST(Commutativity, NonCommutingPair) {
  const auto rep = check_commutativity(make_model("noncommuting-2d"));
  EXPECT_FALSE(rep.brownian_commute);
  EXPECT_GE(rep.max_brownian_bracket, 1.0);
}

TEST(Commutativity, BlackScholesFullyCommutes) {
  const auto rep = check_commutativity(make_model("bs"));
  EXPECT_TRUE(rep.brownian_commute);
  EXPECT_TRUE(rep.drift_commutes);
}

TEST(Commutativity, EmptyPointListRejected) {
  EXPECT_THROW(check_commutativity(make_model("bs"), {}), ConfigError);
}

TEST(Registry, AnalyticDerivativesAgreeWithFiniteDifferences) {
  for (const auto& name : model_names()) {
    const SdeModel m = make_model(name);
    std::vector<VectorField> fields = m.diffusion;
    fields.push_back(m.drift);
    fields.push_back(stratonovich_drift(m));
    for (const Vec& x : default_probe_points(m, 16)) {
      for (const auto& f : fields) {
        if (!f.has_jacobian()) continue;
        EXPECT_LT(testing::rel_err(f.analytic_jacobian(x), fd_jacobian(f, x)), 1e-5) << name << " " << f.label();
      }
    }
  }
}

TEST(Registry, UnknownModelAndParameterRejected) {
  EXPECT_THROW(make_model("heston"), ConfigError);
  EXPECT_THROW(make_model("bs", {{"kappa", 1.0}}), ConfigError);
  EXPECT_THROW(make_model("bs", {}, 1.0, Vec::Ones(2)), DimensionError);
}

}  // namespace
}  // namespace nvsplit
