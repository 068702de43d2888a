#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "sgdwr/errors.hpp"

namespace sgdwr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Batch = std::vector<int>;

struct Datum {
  int index = 0;
  Vec input;
  Vec label;
};

class Dataset {
 public:
  Dataset() = default;
  // re-indexes items 0..n-1
  explicit Dataset(std::vector<Datum> items);

  int n() const { return static_cast<int>(items_.size()); }
  const Datum& operator[](int i) const { return items_[static_cast<size_t>(i)]; }
  const std::vector<Datum>& items() const { return items_; }

 private:
  std::vector<Datum> items_;
};

Batch full_batch(const Dataset& data);

// Per-example loss L(theta, z).  Hessian and third-derivative contraction fall
// back to central differences when the subclass does not override them.
class LossOracle {
 public:
  virtual ~LossOracle() = default;

  virtual int dim() const = 0;
  virtual double value(const Vec& theta, const Datum& z) const = 0;
  virtual Vec gradient(const Vec& theta, const Datum& z) const = 0;
  virtual Mat hessian(const Vec& theta, const Datum& z) const;
  // returns sum_{jk} d^3 L / d theta_i d theta_j d theta_k v_j w_k
  virtual Vec third(const Vec& theta, const Datum& z, const Vec& v, const Vec& w) const;

  virtual bool has_analytic_hessian() const { return false; }
  virtual bool has_analytic_third() const { return false; }
  virtual bool is_cross_entropy() const { return false; }

  Mat fd_hessian(const Vec& theta, const Datum& z) const;
  Vec fd_third(const Vec& theta, const Datum& z, const Vec& v, const Vec& w) const;
};

struct Hyperparams {
  double eta = 0.01;
  int k = 1;
  int b = 1;

  double c() const { return eta * k; }
  // throws InvalidArgument on eta <= 0, k < 1, b < 1
  void check() const;
};

struct HessianSpectrum {
  Vec values;   // descending
  Mat vectors;  // column j pairs with values[j]
};

// cbrt(machine eps) * (1 + |theta|)
double fd_step(const Vec& theta);

double eval_loss(const LossOracle& f, const Vec& theta, const Dataset& data, const Batch& batch);
Vec grad(const LossOracle& f, const Vec& theta, const Dataset& data, const Batch& batch);
Mat hessian(const LossOracle& f, const Vec& theta, const Dataset& data, const Batch& batch);
Vec third_derivative_contraction(const LossOracle& f, const Vec& theta, const Dataset& data,
                                 const Batch& batch, const Vec& v, const Vec& w);

// full-dataset conveniences
double eval_loss(const LossOracle& f, const Vec& theta, const Dataset& data);
Vec grad(const LossOracle& f, const Vec& theta, const Dataset& data);
Mat hessian(const LossOracle& f, const Vec& theta, const Dataset& data);

HessianSpectrum hessian_spectrum(const LossOracle& f, const Vec& theta, const Dataset& data);
HessianSpectrum symmetric_spectrum(const Mat& m);

struct Problem {
  std::string kind;
  std::shared_ptr<const LossOracle> oracle;
  Dataset data;
  Vec init;
  std::vector<Vec> reference_points;  // e.g. min-norm solutions
  std::string notes;
};

}  // namespace sgdwr
