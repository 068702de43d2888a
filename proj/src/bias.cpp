#include "sgdwr/bias.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <vector>

namespace sgdwr {

using Big = boost::multiprecision::cpp_bin_float_100;

const char* to_string(Regime r) {
  switch (r) {
    case Regime::BothSmall: return "BothSmall";
    case Regime::ISmallJBig: return "ISmallJBig";
    case Regime::IBigJSmall: return "IBigJSmall";
    case Regime::BothBig: return "BothBig";
    case Regime::JNegative: return "JNegative";
    case Regime::Interpolated: return "Interpolated";
  }
  return "?";
}

namespace {

constexpr int kMaxSeriesK = 10000;

template <class T>
T tabs(const T& x) {
  using std::abs;
  using boost::multiprecision::abs;
  return abs(x);
}

template <class T>
struct Summed {
  T sum = 0;
  T abs_sum = 0;
};

// ascending-magnitude Kahan summation; also returns sum |t| for conditioning
template <class T>
Summed<T> kahan(std::vector<T>& terms) {
  std::sort(terms.begin(), terms.end(), [](const T& a, const T& b) { return tabs(a) < tabs(b); });
  Summed<T> r;
  T comp = 0;
  for (const T& t : terms) {
    T y = t - comp;
    T s = r.sum + y;
    comp = (s - r.sum) - y;
    r.sum = s;
    r.abs_sum += tabs(t);
  }
  return r;
}

// sum_{j=i+2}^{k} C(k,j) x^{j-i-2}
template <class T>
Summed<T> s_series(int i, int k, const T& x) {
  T c = 1;  // C(k, i+2)
  for (int m = 1; m <= i + 2; ++m) c = c * T(k - (i + 2) + m) / T(m);
  std::vector<T> terms;
  T t = c;
  for (int j = i + 2; j <= k; ++j) {
    terms.push_back(t);
    t = t * T(k - j) / T(j + 1) * x;
  }
  return kahan(terms);
}

// sum_{m=2}^{k} C(k,m) h_{m-2}(x, y), h the complete homogeneous polynomial
template <class T>
Summed<T> w_series(int k, const T& x, const T& y) {
  std::vector<T> terms;
  T c = T(k) * T(k - 1) / 2;  // C(k,2)
  T h = 1, xp = 1, habs = 1, xpa = 1;
  const T ax = tabs(x), ay = tabs(y);
  T bound = 0;
  for (int m = 2; m <= k; ++m) {
    if (m > 2) {
      xp = xp * x;
      h = y * h + xp;
      xpa = xpa * ax;
      habs = ay * habs + xpa;
      c = c * T(k - m + 1) / T(m);
    }
    terms.push_back(c * h);
    bound += c * habs;
  }
  Summed<T> r = kahan(terms);
  r.abs_sum = std::max(r.abs_sum, bound);
  return r;
}

bool well_conditioned(double sum, double abs_sum) {
  if (!std::isfinite(sum) || !std::isfinite(abs_sum)) return false;
  if (abs_sum == 0) return true;
  return abs_sum <= 1e4 * std::abs(sum);
}

template <class F, class G>
double robust(F&& in_double, G&& in_big, const char* what) {
  Summed<double> d = in_double();
  if (well_conditioned(d.sum, d.abs_sum)) return d.sum;
  Summed<Big> b = in_big();
  if (b.sum != 0 && b.abs_sum > Big(1e80) * tabs(b.sum))
    throw Error(ErrorKind::NumericalFailure,
                std::string(what) +
                    ": binomial series too ill-conditioned (|eta lambda| k too large); use s_entry_table "
                    "or s0_approximation for this regime");
  double v = b.sum.convert_to<double>();
  if (!std::isfinite(v))
    throw Error(ErrorKind::NumericalFailure,
                std::string(what) + ": series overflows double; use the regime approximations");
  return v;
}

void check_k(const Hyperparams& hyper) {
  hyper.check();
  if (hyper.k > kMaxSeriesK)
    throw Error(ErrorKind::NumericalFailure, "exact S series capped at k = 10^4; use regime approximations");
}

double w_value(double lambda_i, double lambda_j, const Hyperparams& hyper) {
  const double x = -hyper.eta * lambda_i, y = -hyper.eta * lambda_j;
  const int k = hyper.k;
  if (k < 2) return 0;
  double w = robust([&] { return w_series<double>(k, x, y); },
                    [&] { return w_series<Big>(k, Big(x), Big(y)); }, "S entry");
  return hyper.eta * hyper.eta / (2 * hyper.c()) * w;
}

double w_value_reversed(double lambda_i, double lambda_j, const Hyperparams& hyper) {
  const double x = -hyper.eta * lambda_i;
  double acc = 0;
  for (int h = 0; h <= hyper.k - 2; ++h) acc += std::pow(x, hyper.k - 2 - h) * s_value(h, lambda_j, hyper);
  return acc;
}

Mat in_basis(const HessianSpectrum& sp, const Vec& diag) {
  return sp.vectors * diag.asDiagonal() * sp.vectors.transpose();
}

struct PerExample {
  std::vector<Vec> g;
  std::vector<Mat> A;
  Vec gbar;
  Mat Abar;
};

PerExample per_example(const LossOracle& f, const Vec& theta, const Dataset& data) {
  PerExample p;
  const int d = f.dim();
  p.gbar = Vec::Zero(d);
  p.Abar = Mat::Zero(d, d);
  for (const Datum& z : data.items()) {
    p.g.push_back(f.gradient(theta, z));
    Mat a = f.hessian(theta, z);
    p.A.push_back(0.5 * (a + a.transpose()));
    p.gbar += p.g.back();
    p.Abar += p.A.back();
  }
  p.gbar /= data.n();
  p.Abar /= data.n();
  return p;
}

Mat covariance_gradient_from(const PerExample& p, const Vec& v) {
  const int d = static_cast<int>(v.size());
  Mat D = Mat::Zero(d, d);
  Vec gdot_bar = Vec::Zero(d);
  for (size_t z = 0; z < p.g.size(); ++z) {
    Vec gd = p.A[z] * v;
    D += gd * p.g[z].transpose() + p.g[z] * gd.transpose();
    gdot_bar += gd;
  }
  const double n = static_cast<double>(p.g.size());
  D /= n;
  gdot_bar /= n;
  D -= gdot_bar * p.gbar.transpose() + p.gbar * gdot_bar.transpose();
  return D;
}

}  // namespace

Mat gradient_covariance(const LossOracle& f, const Vec& theta, const Dataset& data) {
  const int d = f.dim();
  Mat C = Mat::Zero(d, d);
  Vec gbar = Vec::Zero(d);
  for (const Datum& z : data.items()) {
    Vec g = f.gradient(theta, z);
    C += g * g.transpose();
    gbar += g;
  }
  C /= data.n();
  gbar /= data.n();
  return C - gbar * gbar.transpose();
}

Mat variance_hessian_H(const LossOracle& f, const Vec& theta, const Dataset& data, const Hyperparams& hyper) {
  hyper.check();
  const int d = f.dim();
  Mat sq = Mat::Zero(d, d), mean = Mat::Zero(d, d);
  for (const Datum& z : data.items()) {
    Mat a = f.hessian(theta, z);
    a = 0.5 * (a + a.transpose());
    sq += a * a;
    mean += a;
  }
  const double n = data.n();
  sq /= n;
  mean /= n;
  Mat H = hyper.c() * hyper.c() / (2 * n) * (sq - mean * mean);
  return 0.5 * (H + H.transpose());
}

double s_value(int i, double lambda, const Hyperparams& hyper) {
  check_k(hyper);
  if (i < 0 || i > hyper.k - 2) throw Error(ErrorKind::InvalidArgument, "need 0 <= i <= k-2");
  const double x = -hyper.eta * lambda;
  double s = robust([&] { return s_series<double>(i, hyper.k, x); },
                    [&] { return s_series<Big>(i, hyper.k, Big(x)); }, "S_i");
  return hyper.eta * hyper.eta / (2 * hyper.c()) * s;
}

Mat s_matrix(int i, const HessianSpectrum& sp, const Hyperparams& hyper) {
  Vec diag(sp.values.size());
  for (long j = 0; j < diag.size(); ++j) diag[j] = s_value(i, sp.values[j], hyper);
  return in_basis(sp, diag);
}

double s_entry_exact(double lambda_i, double lambda_j, const Hyperparams& hyper) {
  check_k(hyper);
  return w_value(lambda_i, lambda_j, hyper);
}

RegimeEntry s_entry_table(double lambda_i, double lambda_j, const Hyperparams& hyper) {
  hyper.check();
  const double c = hyper.c();
  const double ci = c * lambda_i, cj = c * lambda_j;
  RegimeEntry e;
  e.lambda_i = lambda_i;
  e.lambda_j = lambda_j;
  const bool small_i = std::abs(ci) <= 0.1, small_j = std::abs(cj) <= 0.1;
  const bool big_i = ci >= 5, big_j = cj >= 5;
  if (cj <= -5) {
    e.regime = Regime::JNegative;
    e.value = c / 2 * std::exp(-cj) / (cj * cj);
    e.order_only = true;
  } else if (small_i && small_j) {
    e.regime = Regime::BothSmall;
    e.value = c / 4;
  } else if (big_i && small_j) {
    e.regime = Regime::IBigJSmall;
    e.value = c / 2 / ci;
  } else if (small_i && big_j) {
    e.regime = Regime::ISmallJBig;
    e.value = c / 2 / cj;
  } else if (big_i && big_j) {
    e.regime = Regime::BothBig;
    e.value = c / 2 * (1 + std::pow(-hyper.eta * lambda_i, hyper.k)) / (ci * cj);
  } else {
    e.regime = Regime::Interpolated;
    e.value = s_entry_exact(lambda_i, lambda_j, hyper);
  }
  return e;
}

double s0_approximation(double lambda, double H, const Hyperparams& hyper, S0Regime regime) {
  hyper.check();
  const double c = hyper.c(), cl = c * lambda;
  switch (regime) {
    case S0Regime::SmallCLambda: {
      if (H < 0) throw Error(ErrorKind::InvalidArgument, "H entry must be >= 0");
      if (H < 1e-6)
        return c / 4 * (1 - cl / 3 - H / 6 + cl * H / 10 + H * H / 30 - cl * H * H / 42);
      const double r = std::sqrt(H);
      const double e = std::erf(r);
      const double F = (std::sqrt(M_PI * H) * e + std::exp(-H) - 1) / H;
      const double G = (1 - std::sqrt(M_PI) * e / (2 * r)) / H;
      return c / 4 * (F - cl * G);
    }
    case S0Regime::LargePositive:
      if (lambda <= 0) throw Error(ErrorKind::InvalidArgument, "LargePositive needs lambda > 0");
      return 1 / (2 * lambda);
    case S0Regime::LargeNegative:
      if (lambda >= 0) throw Error(ErrorKind::InvalidArgument, "LargeNegative needs lambda < 0");
      return 0.5 / (lambda * lambda) * std::exp(-cl) * (std::exp(-H) - 4 * H / cl);
  }
  return 0;
}

Mat a_matrix(int i, const HessianSpectrum& sp, const Hyperparams& hyper, AIndexing indexing) {
  hyper.check();
  if (i < 0 || i > std::max(0, hyper.k - 2)) throw Error(ErrorKind::InvalidArgument, "need 0 <= i <= k-2");
  const int p = indexing == AIndexing::Power ? i : hyper.k - 2 - i;
  Vec diag(sp.values.size());
  for (long j = 0; j < diag.size(); ++j) diag[j] = p == 0 ? 1.0 : std::pow(-hyper.eta * sp.values[j], p);
  return in_basis(sp, diag);
}

namespace {

Vec pinv_sq_diag(const HessianSpectrum& sp, double eta) {
  const long d = sp.values.size();
  Vec m(d);
  double mx = 0;
  for (long j = 0; j < d; ++j) {
    m[j] = 1 - eta * sp.values[j];
    mx = std::max(mx, std::abs(m[j]));
  }
  const double tau = 1e-10 * mx;
  Vec out(d);
  for (long j = 0; j < d; ++j) out[j] = std::abs(m[j]) < tau ? 0.0 : 1.0 / (m[j] * m[j]);
  return out;
}

}  // namespace

Mat scal_matrix(int i, const HessianSpectrum& sp, const Mat& H, const Hyperparams& hyper) {
  return in_basis(sp, pinv_sq_diag(sp, hyper.eta)) * H * s_matrix(i, sp, hyper);
}

BiasOperators bias_operators(const LossOracle& f, const Vec& theta, const Dataset& data,
                             const Hyperparams& hyper, AIndexing indexing) {
  BiasOperators ops;
  ops.basis = hessian_spectrum(f, theta, data);
  ops.H = variance_hessian_H(f, theta, data, hyper);
  for (int i = 0; i <= hyper.k - 2; ++i) {
    ops.S.push_back(s_matrix(i, ops.basis, hyper));
    ops.Scal.push_back(scal_matrix(i, ops.basis, ops.H, hyper));
    ops.A.push_back(a_matrix(i, ops.basis, hyper, indexing));
  }
  return ops;
}

Mat covariance_gradient(const LossOracle& f, const Vec& theta, const Dataset& data, const Vec& direction,
                        bool finite_difference) {
  if (direction.size() != f.dim() || std::abs(direction.norm() - 1) > 1e-10)
    throw Error(ErrorKind::InvalidArgument, "direction must be a unit vector of dimension d");
  if (finite_difference) {
    const double h = fd_step(theta);
    return (gradient_covariance(f, theta + h * direction, data) -
            gradient_covariance(f, theta - h * direction, data)) /
           (2 * h);
  }
  return covariance_gradient_from(per_example(f, theta, data), direction);
}

Vec regularizer_step(const LossOracle& f, const Vec& theta, const Dataset& data, const Hyperparams& hyper,
                     const BiasOptions& options) {
  check_k(hyper);
  const int d = f.dim();
  const int n = data.n();
  if (n == 1 || hyper.k < 2) return Vec::Zero(d);
  double coef = hyper.c() / (n - 1);
  if (options.coefficient == RegCoefficient::BatchMinusOne) {
    if (hyper.b < 2) throw Error(ErrorKind::InvalidArgument, "eta/(b-1) prefactor needs b >= 2");
    coef = hyper.eta / (hyper.b - 1);
  }
  PerExample pe = per_example(f, theta, data);
  HessianSpectrum sp = symmetric_spectrum(pe.Abar);
  const Mat& V = sp.vectors;

  Mat W(d, d);
  for (int p = 0; p < d; ++p)
    for (int l = 0; l < d; ++l)
      W(p, l) = options.a_indexing == AIndexing::Power ? w_value(sp.values[p], sp.values[l], hyper)
                                                       : w_value_reversed(sp.values[p], sp.values[l], hyper);

  Vec step_t = Vec::Zero(d);  // eigenbasis coordinates
  for (int p = 0; p < d; ++p) {
    Mat D = options.finite_difference_cov ? covariance_gradient(f, theta, data, V.col(p), true)
                                          : covariance_gradient_from(pe, V.col(p));
    double acc = 0;
    for (int l = 0; l < d; ++l) acc += W(p, l) * V.col(l).dot(D * V.col(l));
    step_t[p] = -coef * acc;
  }

  if (options.include_scal_term && pe.gbar.norm() > 0) {
    Mat H = variance_hessian_H(f, theta, data, hyper);
    Mat Ht = V.transpose() * H * V;
    Vec P = pinv_sq_diag(sp, hyper.eta);
    Vec gt = V.transpose() * pe.gbar;
    // sum_i A_i Hess (Scal_i + Scal_i^T) grad, written in the eigenbasis
    for (int a = 0; a < d; ++a) {
      double acc = 0;
      for (int b = 0; b < d; ++b) acc += (P[a] * Ht(a, b) * W(a, b) + P[b] * Ht(a, b) * W(a, a)) * gt[b];
      step_t[a] -= coef * sp.values[a] * acc;
    }
  }
  return V * step_t;
}

double regularizer_value(const LossOracle& f, const Vec& theta, const Dataset& data,
                         const Hyperparams& hyper, const BatchSchedule& schedule) {
  hyper.check();
  const int k = static_cast<int>(schedule.batches.size());
  if (k != hyper.k) throw Error(ErrorKind::InvalidArgument, "schedule length differs from k");
  const int d = f.dim();
  const double eta = hyper.eta;
  std::vector<Vec> g;
  std::vector<Mat> A;
  for (const Batch& b : schedule.batches) {
    g.push_back(grad(f, theta, data, b));
    A.push_back(hessian(f, theta, data, b));
  }
  const Mat I = Mat::Identity(d, d);
  double first = 0;
  for (int i = 0; i < k; ++i) {
    Vec v = eta * g[static_cast<size_t>(i)];
    for (int j = i + 1; j < k; ++j) {
      first += 0.5 * eta * g[static_cast<size_t>(j)].dot(v);
      v = (I - eta * A[static_cast<size_t>(j)]) * v;
    }
  }
  // full-batch counterpart: Hess^{2+}([I - eta Hess]^k + eta k Hess - I) written as a polynomial so
  // that flat directions keep their limit eta^2 k(k-1)/2
  const Vec gbar = grad(f, theta, data);
  HessianSpectrum sp = hessian_spectrum(f, theta, data);
  Vec gt = sp.vectors.transpose() * gbar;
  double second = 0;
  for (long p = 0; p < gt.size(); ++p) {
    const double q = 1 - eta * sp.values[p];
    double phi = 0, pw = 1;
    for (int m = 1; m <= k - 1; ++m) {
      phi += (k - m) * pw;
      pw *= q;
    }
    second += 0.5 * eta * eta * phi * gt[p] * gt[p];
  }
  return first - second;
}

double regularizer_value_expected(const LossOracle& f, const Vec& theta, const Dataset& data,
                                  const Hyperparams& hyper, Policy policy, double budget) {
  double sum = 0;
  long count = 0;
  for_each_schedule(
      data.n(), hyper, policy,
      [&](const BatchSchedule& s) {
        sum += regularizer_value(f, theta, data, hyper, s);
        ++count;
      },
      budget);
  return sum / static_cast<double>(count);
}

double error_bound(const LossOracle& f, const Vec& theta, const Dataset& data, const Hyperparams& hyper) {
  hyper.check();
  const int d = f.dim();
  Mat C = gradient_covariance(f, theta, data);
  HessianSpectrum cs = symmetric_spectrum(C);
  const Batch all = full_batch(data);
  Vec T = Vec::Zero(d);
  for (int l = 0; l < d; ++l) {
    if (cs.values[l] == 0) continue;
    const Vec u = cs.vectors.col(l);
    T += cs.values[l] * third_derivative_contraction(f, theta, data, all, u, u);
  }
  const double c = hyper.c(), b = hyper.b;
  const double flat = c * c * c / (12 * b) * T.norm();
  const double curved = hyper.eta * c * c / (4 * b) * (hessian(f, theta, data) * T).norm();
  return std::max(flat, curved);
}

double fisher_hessian_gap(const LossOracle& f, const Vec& theta, const Dataset& data) {
  if (!f.is_cross_entropy())
    throw Error(ErrorKind::InvalidArgument, "Fisher-Hessian gap needs a cross-entropy classifier");
  const int d = f.dim();
  Mat F = Mat::Zero(d, d);
  for (const Datum& z : data.items()) {
    Vec g = f.gradient(theta, z);
    F += g * g.transpose();
  }
  F /= data.n();
  Mat Hs = hessian(f, theta, data);
  const double hn = Hs.norm();
  if (!(hn > 1e-300))
    throw Error(ErrorKind::DegenerateProblem,
                "Hessian is zero (saturated predictions); Fisher norm " + std::to_string(F.norm()));
  return (F - Hs).norm() / hn;
}

SaddleOverlap overlap_u(const LossOracle& f, const Vec& theta, const Dataset& data, const Vec& v) {
  if (v.size() != f.dim() || std::abs(v.norm() - 1) > 1e-10)
    throw Error(ErrorKind::InvalidArgument, "v must be a unit vector of dimension d");
  double u = 0;
  for (const Datum& z : data.items()) u += v.dot(f.hessian(theta, z) * f.gradient(theta, z));
  return {v, u / data.n()};
}

double gradient_scale(const LossOracle& f, const Vec& theta, const Dataset& data, const Hyperparams& hyper) {
  double s = 0;
  for (const Datum& z : data.items()) s += f.gradient(theta, z).squaredNorm();
  return hyper.c() * std::sqrt(s / data.n());
}

BiasReport bias_report(const LossOracle& f, const Vec& theta, const Dataset& data, const Hyperparams& hyper,
                       Policy policy, const EmpiricalMode& mode, const BiasOptions& options) {
  if (policy == Policy::WithReplacement || policy == Policy::NoisedFullBatch)
    throw Error(ErrorKind::InvalidArgument,
                std::string("the regularizer prediction covers without-replacement sampling, not ") +
                    to_string(policy));
  BiasReport r;
  // full-batch epochs have no batch dependence, so nothing is predicted
  r.predicted_step = policy == Policy::FullBatch ? Vec(Vec::Zero(f.dim()))
                                                 : regularizer_step(f, theta, data, hyper, options);
  ExpectationEstimate e = mode.exact ? exact_expected_deviation(f, data, theta, hyper, policy)
                                     : mc_expected_deviation(f, data, theta, hyper, policy, mode.samples,
                                                             mode.seed);
  r.empirical_step = e.value.col(0);
  r.empirical_stderr = e.stderr_.col(0);
  r.empirical_method = to_string(e.method);
  r.samples = e.samples;
  r.residual_norm = (r.predicted_step - r.empirical_step).norm();
  r.gradient_scale = gradient_scale(f, theta, data, hyper);
  r.error_bound = error_bound(f, theta, data, hyper);
  return r;
}

}  // namespace sgdwr
