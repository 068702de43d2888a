#include "sgdwr/problem.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

namespace sgdwr {

Dataset::Dataset(std::vector<Datum> items) : items_(std::move(items)) {
  if (items_.empty()) throw Error(ErrorKind::InvalidArgument, "dataset must have n >= 1");
  for (size_t i = 0; i < items_.size(); ++i) items_[i].index = static_cast<int>(i);
}

Batch full_batch(const Dataset& data) {
  Batch b(static_cast<size_t>(data.n()));
  std::iota(b.begin(), b.end(), 0);
  return b;
}

double fd_step(const Vec& theta) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + theta.norm());
}

Mat LossOracle::hessian(const Vec& theta, const Datum& z) const { return fd_hessian(theta, z); }

Vec LossOracle::third(const Vec& theta, const Datum& z, const Vec& v, const Vec& w) const {
  return fd_third(theta, z, v, w);
}

Mat LossOracle::fd_hessian(const Vec& theta, const Datum& z) const {
  const int d = dim();
  const double h = fd_step(theta);
  Mat m(d, d);
  Vec tp = theta, tm = theta;
  for (int j = 0; j < d; ++j) {
    tp[j] += h;
    tm[j] -= h;
    m.col(j) = (gradient(tp, z) - gradient(tm, z)) / (2 * h);
    tp[j] = theta[j];
    tm[j] = theta[j];
  }
  return 0.5 * (m + m.transpose());
}

Vec LossOracle::fd_third(const Vec& theta, const Datum& z, const Vec& v, const Vec& w) const {
  const double h = fd_step(theta);
  Vec tp = theta + h * v, tm = theta - h * v;
  return (hessian(tp, z) * w - hessian(tm, z) * w) / (2 * h);
}

void Hyperparams::check() const {
  if (!(eta > 0) || !std::isfinite(eta)) throw Error(ErrorKind::InvalidArgument, "eta must be > 0");
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
  if (b < 1) throw Error(ErrorKind::InvalidArgument, "b must be >= 1");
}

namespace {

void check_batch(const Dataset& data, const Batch& batch) {
  if (batch.empty()) throw Error(ErrorKind::InvalidBatch, "empty batch");
  for (int i : batch)
    if (i < 0 || i >= data.n()) throw Error(ErrorKind::InvalidBatch, "index out of range");
}

void check_finite(const Mat& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorKind::NumericalFailure, std::string("non-finite ") + what);
}

}  // namespace

double eval_loss(const LossOracle& f, const Vec& theta, const Dataset& data, const Batch& batch) {
  check_batch(data, batch);
  double s = 0;
  for (int i : batch) s += f.value(theta, data[i]);
  return s / static_cast<double>(batch.size());
}

Vec grad(const LossOracle& f, const Vec& theta, const Dataset& data, const Batch& batch) {
  check_batch(data, batch);
  Vec g = Vec::Zero(f.dim());
  for (int i : batch) g += f.gradient(theta, data[i]);
  return g / static_cast<double>(batch.size());
}

Mat hessian(const LossOracle& f, const Vec& theta, const Dataset& data, const Batch& batch) {
  check_batch(data, batch);
  Mat h = Mat::Zero(f.dim(), f.dim());
  for (int i : batch) h += f.hessian(theta, data[i]);
  h /= static_cast<double>(batch.size());
  check_finite(h, "Hessian");
  const double asym = (h - h.transpose()).norm();
  if (asym > 1e-6 * std::max(h.norm(), 1e-300))
    std::cerr << "warning: Hessian asymmetry " << asym << " relative to " << h.norm() << "\n";
  return 0.5 * (h + h.transpose());
}

Vec third_derivative_contraction(const LossOracle& f, const Vec& theta, const Dataset& data,
                                 const Batch& batch, const Vec& v, const Vec& w) {
  check_batch(data, batch);
  if (v.size() != f.dim() || w.size() != f.dim())
    throw Error(ErrorKind::InvalidArgument, "contraction vectors must have dimension d");
  Vec t = Vec::Zero(f.dim());
  for (int i : batch) t += f.third(theta, data[i], v, w);
  t /= static_cast<double>(batch.size());
  check_finite(t, "third derivative");
  return t;
}

double eval_loss(const LossOracle& f, const Vec& theta, const Dataset& data) {
  return eval_loss(f, theta, data, full_batch(data));
}
Vec grad(const LossOracle& f, const Vec& theta, const Dataset& data) {
  return grad(f, theta, data, full_batch(data));
}
Mat hessian(const LossOracle& f, const Vec& theta, const Dataset& data) {
  return hessian(f, theta, data, full_batch(data));
}

HessianSpectrum symmetric_spectrum(const Mat& m) {
  Mat s = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::NumericalFailure, "eigensolver failed");
  const int d = static_cast<int>(s.rows());
  HessianSpectrum out;
  out.values.resize(d);
  out.vectors.resize(d, d);
  // Eigen returns ascending order
  for (int j = 0; j < d; ++j) {
    out.values[j] = es.eigenvalues()[d - 1 - j];
    Vec v = es.eigenvectors().col(d - 1 - j);
    for (int i = 0; i < d; ++i) {
      if (std::abs(v[i]) > 1e-14) {
        if (v[i] < 0) v = -v;
        break;
      }
    }
    out.vectors.col(j) = v;
  }
  return out;
}

HessianSpectrum hessian_spectrum(const LossOracle& f, const Vec& theta, const Dataset& data) {
  if (f.dim() < 1) throw Error(ErrorKind::InvalidArgument, "d must be >= 1");
  return symmetric_spectrum(hessian(f, theta, data));
}

}  // namespace sgdwr
