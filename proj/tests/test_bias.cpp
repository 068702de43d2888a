#include <cmath>

#include "doctest.h"
#include "sgdwr/bias.hpp"
#include "sgdwr/problems.hpp"

using namespace sgdwr;

TEST_CASE("s_value worked examples") {
  const Hyperparams h{0.1, 10, 1};  // c = 1
  CHECK(s_value(0, 0.0, h) == doctest::Approx(0.225).epsilon(1e-14));
  CHECK(s_value(3, 0.0, h) == doctest::Approx(0.005 * 252).epsilon(1e-14));  // (eta^2/2c) C(10,5)
  CHECK(s_value(8, 2.5, h) == doctest::Approx(0.005).epsilon(1e-14));        // i = k-2
  CHECK_THROWS_AS(s_value(9, 0.0, h), Error);
}

TEST_CASE("s_matrix is a function of the Hessian") {
  Mat M(2, 2);
  M << 3.0, 1.0, 1.0, 2.0;
  HessianSpectrum sp = symmetric_spectrum(M);
  const Hyperparams h{0.05, 8, 1};
  Mat S = s_matrix(1, sp, h);
  CHECK((S * M - M * S).norm() < 1e-14);
  for (int j = 0; j < 2; ++j)
    CHECK(sp.vectors.col(j).dot(S * sp.vectors.col(j)) == doctest::Approx(s_value(1, sp.values[j], h)));
}

TEST_CASE("regime table worked examples") {
  const Hyperparams h{0.01, 1000, 1};  // c = 10
  const double c = h.c();
  RegimeEntry a = s_entry_table(0.01 / c, 0.01 / c, h);
  CHECK(a.regime == Regime::BothSmall);
  CHECK(a.value == doctest::Approx(c / 4));
  RegimeEntry b = s_entry_table(10 / c, 0.01 / c, h);
  CHECK(b.regime == Regime::IBigJSmall);
  CHECK(b.value == doctest::Approx((c / 2) / 10));
  RegimeEntry d = s_entry_table(10 / c, 10 / c, h);
  CHECK(d.regime == Regime::BothBig);
  CHECK(d.value == doctest::Approx((c / 2) * (1 + std::pow(-h.eta * 10 / c, h.k)) / 100));
  RegimeEntry e = s_entry_table(0.01 / c, -10 / c, h);
  CHECK(e.regime == Regime::JNegative);
  CHECK(e.order_only);
  RegimeEntry f = s_entry_table(1 / c, 1 / c, h);
  CHECK(f.regime == Regime::Interpolated);
  CHECK(f.value == doctest::Approx(s_entry_exact(1 / c, 1 / c, h)));
}

TEST_CASE("S0 approximations") {
  const Hyperparams h{0.01, 100, 1};
  CHECK(s0_approximation(0.0, 0.0, h, S0Regime::SmallCLambda) == doctest::Approx(0.25));
  CHECK(s0_approximation(20.0, 0.0, h, S0Regime::LargePositive) == doctest::Approx(1 / 40.0));
  // the closed form and the small-H series meet at the switch
  const double below = s0_approximation(0.1, 0.999e-6, h, S0Regime::SmallCLambda);
  const double above = s0_approximation(0.1, 1.001e-6, h, S0Regime::SmallCLambda);
  CHECK(std::abs(below - above) / below < 1e-6);
  CHECK(std::abs(s0_approximation(0.01, 1e-4, h, S0Regime::SmallCLambda) - 0.25) / 0.25 < 0.01);
}

TEST_CASE("variance Hessian H") {
  Problem same = saddle_problem({5, 1.0, 0.0, 0.0});  // beta = 0: identical Hessians
  CHECK(variance_hessian_H(*same.oracle, same.init, same.data, Hyperparams{0.1, 5, 1}).norm() == 0);
  Problem one = scalar_quadratic_problem(1);
  CHECK(variance_hessian_H(*one.oracle, one.init, one.data, Hyperparams{0.1, 1, 1}).norm() == 0);
  // toy problem off the manifold: direct formula
  Problem toy = toy_diagonal_problem();
  Vec th(2);
  th << 0.5, 3.0;
  const Hyperparams h{0.01, 3, 1};
  Mat m1 = Mat::Zero(2, 2), m2 = Mat::Zero(2, 2);
  for (const Datum& z : toy.data.items()) {
    Mat A = toy.oracle->hessian(th, z);
    m1 += A / 3;
    m2 += A * A / 3;
  }
  Mat want = (h.c() * h.c() / (2 * 3)) * (m2 - m1 * m1);
  CHECK((variance_hessian_H(*toy.oracle, th, toy.data, h) - want).norm() < 1e-14);
}

TEST_CASE("overlap u") {
  Problem toy = toy_diagonal_problem();
  Vec th(2);
  th << 2.0, 0.5;
  Vec t(2);
  t << 2.0, -0.5;
  t.normalize();
  SaddleOverlap o = overlap_u(*toy.oracle, th, toy.data, t);
  CHECK(o.u > 0);  // regularizer drift -u t points toward (1, 1)
  CHECK_THROWS_AS(overlap_u(*toy.oracle, th, toy.data, Vec::Ones(2)), Error);
  Problem sad = saddle_problem({10, 1.0, 1.0, 0.0});
  CHECK(overlap_u(*sad.oracle, sad.init, sad.data, Vec::Unit(2, 0)).u == doctest::Approx(1.0));
}

TEST_CASE("regularizer step vanishes without batch dependence") {
  Problem one = scalar_quadratic_problem(1);
  CHECK(regularizer_step(*one.oracle, one.init, one.data, Hyperparams{0.1, 1, 1}).norm() == 0);
  std::vector<QuadraticTerm> same(4, QuadraticTerm{0.0, Vec::Ones(2), Mat::Identity(2, 2), 0.0, Vec()});
  Problem sym = quadratic_problem(same, Vec::Ones(2));
  CHECK(regularizer_step(*sym.oracle, sym.init, sym.data, Hyperparams{0.1, 4, 1}).norm() < 1e-16);
}

TEST_CASE("Fisher-Hessian gap") {
  Problem p = softmax_self_labeled_problem({3, 3, 500, 1, 1.0});
  const double g = fisher_hessian_gap(*p.oracle, p.init, p.data);
  CHECK(g > 0);
  CHECK(g < 0.5);
  Problem toy = toy_diagonal_problem();
  CHECK_THROWS_AS(fisher_hessian_gap(*toy.oracle, toy.init, toy.data), Error);
}
