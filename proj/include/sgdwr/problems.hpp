#pragma once

#include <cstdint>

#include "sgdwr/problem.hpp"

namespace sgdwr {

// L(theta, z) = c_z + g_z.theta + theta'A_z theta/2 + kappa_z (w_z.theta)^3 / 6
// Per-example coefficients are packed into Datum::input.
class QuadraticCubicOracle : public LossOracle {
 public:
  explicit QuadraticCubicOracle(int d) : d_(d) {}
  int dim() const override { return d_; }
  double value(const Vec& theta, const Datum& z) const override;
  Vec gradient(const Vec& theta, const Datum& z) const override;
  Mat hessian(const Vec& theta, const Datum& z) const override;
  Vec third(const Vec& theta, const Datum& z, const Vec& v, const Vec& w) const override;
  bool has_analytic_hessian() const override { return true; }
  bool has_analytic_third() const override { return true; }

  static Datum pack(double c, const Vec& g, const Mat& A, double kappa, const Vec& w);

 private:
  int d_;
};

struct QuadraticTerm {
  double c = 0;
  Vec g;
  Mat A;
  double kappa = 0;
  Vec w;  // empty means no cubic term
};

Problem quadratic_problem(const std::vector<QuadraticTerm>& terms, const Vec& init);

// L(theta, z) = (a_z.theta - y_z)^2/2 + kappa (w_z.theta)^3/6
Problem least_squares_problem(const std::vector<Vec>& a, const Vec& y, double kappa,
                              const std::vector<Vec>& w, const Vec& init);

// f(theta, x) = theta_1 theta_2 x, L = (f - y)^2, D = {(1,1),(1,2),(1,0)}
class ToyDiagonalOracle : public LossOracle {
 public:
  int dim() const override { return 2; }
  double value(const Vec& theta, const Datum& z) const override;
  Vec gradient(const Vec& theta, const Datum& z) const override;
  Mat hessian(const Vec& theta, const Datum& z) const override;
  Vec third(const Vec& theta, const Datum& z, const Vec& v, const Vec& w) const override;
  bool has_analytic_hessian() const override { return true; }
  bool has_analytic_third() const override { return true; }
};

Problem toy_diagonal_problem();

// 1 -> width -> 1 ReLU network, theta = [w1 (m), b1 (m), w2 (m), b2], L = (f - y)^2
class WReluOracle : public LossOracle {
 public:
  explicit WReluOracle(int width);
  int dim() const override { return 3 * m_ + 1; }
  double value(const Vec& theta, const Datum& z) const override;
  Vec gradient(const Vec& theta, const Datum& z) const override;
  double predict(const Vec& theta, double x) const;

 private:
  int m_;
};

struct WReluSpec {
  int width = 8;
  int n = 9;
  uint64_t init_seed = 1;
  double init_scale = 0.5;
};

Vec w_relu_targets(const Vec& x);
Problem w_relu_problem(const WReluSpec& spec);

// linear softmax classifier, theta = row-major W (classes x features), label = class index
class SoftmaxOracle : public LossOracle {
 public:
  SoftmaxOracle(int classes, int features) : classes_(classes), features_(features) {}
  int dim() const override { return classes_ * features_; }
  double value(const Vec& theta, const Datum& z) const override;
  Vec gradient(const Vec& theta, const Datum& z) const override;
  Mat hessian(const Vec& theta, const Datum& z) const override;
  bool has_analytic_hessian() const override { return true; }
  bool is_cross_entropy() const override { return true; }

  Vec probabilities(const Vec& theta, const Vec& x) const;

 private:
  int classes_;
  int features_;
};

struct SoftmaxSpec {
  int classes = 3;
  int features = 3;
  int n = 1000;
  uint64_t seed = 1;
  double weight_scale = 1.0;
};

// inputs ~ N(0, I), theta random; labels drawn from the model's own predictive distribution
Problem softmax_self_labeled_problem(const SoftmaxSpec& spec);
Problem softmax_problem(int classes, int features, const std::vector<Vec>& x,
                        const std::vector<int>& labels, const Vec& theta);

// Strict saddle benchmark:
//   L_z = -theta_1^2/2 + theta_2^2/2 + a_z theta_2 + b_z theta_1 theta_2 + kappa theta_1^3/6
// with a_z = sigma_a q_z, b_z = beta q_z and q a centred unit-variance grid, so that
// grad L(0) = 0, the full-batch Hessian is diag(-1, 1) and u = sigma_a beta along e_1.
struct SaddleSpec {
  int n = 100;
  double sigma_a = 1.0;
  double beta = 1.0;
  double kappa = 0.0;
};

Problem saddle_problem(const SaddleSpec& spec);

Problem scalar_quadratic_problem(int n = 1);

}  // namespace sgdwr
