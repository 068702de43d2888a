#include "doctest.h"
#include "sgdwr/problems.hpp"

using namespace sgdwr;

TEST_CASE("toy problem matches the cited dataset and initialization") {
  Problem p = toy_diagonal_problem();
  CHECK(p.data.n() == 3);
  CHECK(p.init[0] == 1.0);
  CHECK(p.init[1] == 6.0);
  // (6-1)^2 + (6-2)^2 + (6-0)^2 over 3
  CHECK(eval_loss(*p.oracle, p.init, p.data) == doctest::Approx(77.0 / 3).epsilon(1e-15));
  Vec g = grad(*p.oracle, p.init, p.data);
  CHECK(g[0] == doctest::Approx(60.0));
  CHECK(g[1] == doctest::Approx(10.0));
  // minimum manifold theta_1 theta_2 = 1
  Vec on(2);
  on << 4.0, 0.25;
  CHECK(grad(*p.oracle, on, p.data).norm() < 1e-14);
  REQUIRE(p.reference_points.size() == 2);
  CHECK((p.reference_points[0] - Vec::Ones(2)).norm() == 0.0);
}

TEST_CASE("batch reductions") {
  Problem p = toy_diagonal_problem();
  Vec th(2);
  th << 0.5, 2.0;
  const double l0 = p.oracle->value(th, p.data[0]), l2 = p.oracle->value(th, p.data[2]);
  CHECK(eval_loss(*p.oracle, th, p.data, {0, 2}) == doctest::Approx((l0 + l2) / 2).epsilon(1e-15));
  CHECK_THROWS_AS(eval_loss(*p.oracle, th, p.data, Batch{}), Error);
  CHECK_THROWS_AS(grad(*p.oracle, th, p.data, Batch{}), Error);
  Mat H = hessian(*p.oracle, th, p.data, {1});
  CHECK((H - H.transpose()).norm() == 0.0);
}

TEST_CASE("analytic derivatives agree with finite differences") {
  Problem p = toy_diagonal_problem();
  Vec th(2);
  th << 0.7, -1.3;
  for (const Datum& z : p.data.items()) {
    CHECK((p.oracle->hessian(th, z) - p.oracle->fd_hessian(th, z)).norm() < 1e-6);
    Vec v(2), w(2);
    v << 0.3, -0.8;
    w << 1.1, 0.4;
    CHECK((p.oracle->third(th, z, v, w) - p.oracle->fd_third(th, z, v, w)).norm() < 1e-5);
  }
}

TEST_CASE("spectrum is descending with a sign convention") {
  Mat M(2, 2);
  M << 2.0, 1.0, 1.0, 2.0;
  HessianSpectrum s = symmetric_spectrum(M);
  CHECK(s.values[0] == doctest::Approx(3.0));
  CHECK(s.values[1] == doctest::Approx(1.0));
  CHECK(s.vectors(0, 0) > 0);
  CHECK(std::abs(s.vectors.col(0).norm() - 1) < 1e-14);
}

TEST_CASE("W-ReLU instance") {
  Problem p = w_relu_problem({});
  CHECK(p.data.n() == 9);
  CHECK(p.oracle->dim() == 3 * 8 + 1);
  CHECK(p.data[0].label[0] == doctest::Approx(0.0));   // x = -1
  CHECK(p.data[2].label[0] == doctest::Approx(-1.0));  // x = -0.5
  CHECK(p.data[4].label[0] == doctest::Approx(0.0));   // x = 0
  CHECK(p.data[6].label[0] == doctest::Approx(-1.0));  // x = 0.5
  CHECK(p.data[8].label[0] == doctest::Approx(0.0));   // x = 1
  const auto& relu = static_cast<const WReluOracle&>(*p.oracle);
  CHECK(relu.predict(Vec::Zero(relu.dim()), 0.3) == 0.0);
  CHECK_THROWS_AS(w_relu_problem({0, 9, 1, 0.5}), Error);
}

TEST_CASE("saddle benchmark construction") {
  Problem p = saddle_problem({50, 1.0, 1.0, 0.0});
  CHECK(grad(*p.oracle, p.init, p.data).norm() < 1e-14);
  HessianSpectrum s = hessian_spectrum(*p.oracle, p.init, p.data);
  CHECK(s.values[0] == doctest::Approx(1.0));
  CHECK(s.values[1] == doctest::Approx(-1.0));
}

TEST_CASE("softmax self-labeled problem") {
  Problem p = softmax_self_labeled_problem({3, 3, 50, 2, 1.0});
  CHECK(p.oracle->is_cross_entropy());
  CHECK(p.oracle->dim() == 9);
  Vec th = p.init;
  for (int i = 0; i < 5; ++i) {
    const Datum& z = p.data[i];
    CHECK((p.oracle->hessian(th, z) - p.oracle->fd_hessian(th, z)).norm() < 1e-6);
  }
}
