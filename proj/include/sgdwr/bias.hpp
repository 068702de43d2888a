#pragma once

#include <string>
#include <vector>

#include "sgdwr/expectation.hpp"

namespace sgdwr {

// Prefactor of the regularizer step.  NMinusOne is c/(n-1), the exact
// cross-batch covariance factor; BatchMinusOne is eta/(b-1).
enum class RegCoefficient { NMinusOne, BatchMinusOne };
// Power: A_i = (-eta Hess)^i.  Reversed: A_i = (-eta Hess)^(k-2-i).
enum class AIndexing { Power, Reversed };

struct BiasOptions {
  RegCoefficient coefficient = RegCoefficient::NMinusOne;
  AIndexing a_indexing = AIndexing::Power;
  bool include_scal_term = true;
  bool finite_difference_cov = false;
};

struct BiasOperators {
  Mat H;
  std::vector<Mat> S, Scal, A;
  HessianSpectrum basis;
};

enum class Regime { BothSmall, ISmallJBig, IBigJSmall, BothBig, JNegative, Interpolated };
const char* to_string(Regime r);

struct RegimeEntry {
  double lambda_i = 0, lambda_j = 0;
  Regime regime = Regime::Interpolated;
  double value = 0;
  bool order_only = false;  // JNegative: a lower-bound order, not a value
};

enum class S0Regime { SmallCLambda, LargePositive, LargeNegative };

struct SaddleOverlap {
  Vec v;
  double u = 0;
};

struct BiasReport {
  Vec predicted_step;
  Vec empirical_step;
  Vec empirical_stderr;
  std::string empirical_method;
  long samples = 0;
  double residual_norm = 0;
  double gradient_scale = 0;
  double error_bound = 0;
};

Mat gradient_covariance(const LossOracle& f, const Vec& theta, const Dataset& data);
Mat variance_hessian_H(const LossOracle& f, const Vec& theta, const Dataset& data, const Hyperparams& hyper);

// (eta^2/2c) sum_{j=i+2}^{k} C(k,j) (-eta lambda)^{j-i-2}
double s_value(int i, double lambda, const Hyperparams& hyper);
Mat s_matrix(int i, const HessianSpectrum& spectrum, const Hyperparams& hyper);
// sum_{h=0}^{k-2} (-eta lambda_i)^h S_h(lambda_j), the two-index entry tabulated by regime
double s_entry_exact(double lambda_i, double lambda_j, const Hyperparams& hyper);
RegimeEntry s_entry_table(double lambda_i, double lambda_j, const Hyperparams& hyper);
double s0_approximation(double lambda, double H, const Hyperparams& hyper, S0Regime regime);

Mat a_matrix(int i, const HessianSpectrum& spectrum, const Hyperparams& hyper,
             AIndexing indexing = AIndexing::Power);
Mat scal_matrix(int i, const HessianSpectrum& spectrum, const Mat& H, const Hyperparams& hyper);
BiasOperators bias_operators(const LossOracle& f, const Vec& theta, const Dataset& data,
                             const Hyperparams& hyper, AIndexing indexing = AIndexing::Power);

// d/dt Cov_z(grad L(theta + t v, z)) at t = 0
Mat covariance_gradient(const LossOracle& f, const Vec& theta, const Dataset& data, const Vec& direction,
                        bool finite_difference = false);

Vec regularizer_step(const LossOracle& f, const Vec& theta, const Dataset& data, const Hyperparams& hyper,
                     const BiasOptions& options = {});

double regularizer_value(const LossOracle& f, const Vec& theta, const Dataset& data,
                         const Hyperparams& hyper, const BatchSchedule& schedule);
double regularizer_value_expected(const LossOracle& f, const Vec& theta, const Dataset& data,
                                  const Hyperparams& hyper, Policy policy = Policy::WithoutReplacement,
                                  double budget = kEnumerationBudget);

double error_bound(const LossOracle& f, const Vec& theta, const Dataset& data, const Hyperparams& hyper);
double fisher_hessian_gap(const LossOracle& f, const Vec& theta, const Dataset& data);
SaddleOverlap overlap_u(const LossOracle& f, const Vec& theta, const Dataset& data, const Vec& v);

// eta k times the root-mean-square per-example gradient norm
double gradient_scale(const LossOracle& f, const Vec& theta, const Dataset& data, const Hyperparams& hyper);

struct EmpiricalMode {
  bool exact = true;  // false: Monte Carlo
  long samples = 10000;
  uint64_t seed = 1;
};

BiasReport bias_report(const LossOracle& f, const Vec& theta, const Dataset& data, const Hyperparams& hyper,
                       Policy policy, const EmpiricalMode& mode = {}, const BiasOptions& options = {});

}  // namespace sgdwr
