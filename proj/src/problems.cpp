#include "sgdwr/problems.hpp"

#include <cmath>
#include <random>

namespace sgdwr {

// ---- quadratic + cubic -------------------------------------------------------
// input layout: [c, g (d), A (d*d, column-major), kappa, w (d)]

namespace {

struct QuadView {
  double c;
  Eigen::Map<const Vec> g;
  Eigen::Map<const Mat> A;
  double kappa;
  Eigen::Map<const Vec> w;

  QuadView(const Vec& in, int d)
      : c(in[0]),
        g(in.data() + 1, d),
        A(in.data() + 1 + d, d, d),
        kappa(in[1 + d + d * d]),
        w(in.data() + 2 + d + d * d, d) {}
};

}  // namespace

Datum QuadraticCubicOracle::pack(double c, const Vec& g, const Mat& A, double kappa, const Vec& w) {
  const long d = g.size();
  Datum z;
  z.input.resize(2 + 2 * d + d * d);
  z.input[0] = c;
  z.input.segment(1, d) = g;
  z.input.segment(1 + d, d * d) = Eigen::Map<const Vec>(A.data(), d * d);
  z.input[1 + d + d * d] = kappa;
  z.input.segment(2 + d + d * d, d) = w.size() == d ? w : Vec(Vec::Zero(d));
  return z;
}

double QuadraticCubicOracle::value(const Vec& th, const Datum& z) const {
  QuadView q(z.input, d_);
  const double s = q.w.dot(th);
  return q.c + q.g.dot(th) + 0.5 * th.dot(q.A * th) + q.kappa * s * s * s / 6.0;
}

Vec QuadraticCubicOracle::gradient(const Vec& th, const Datum& z) const {
  QuadView q(z.input, d_);
  const double s = q.w.dot(th);
  return q.g + 0.5 * (q.A + q.A.transpose()) * th + 0.5 * q.kappa * s * s * q.w;
}

Mat QuadraticCubicOracle::hessian(const Vec& th, const Datum& z) const {
  QuadView q(z.input, d_);
  const double s = q.w.dot(th);
  return 0.5 * (q.A + q.A.transpose()) + q.kappa * s * q.w * q.w.transpose();
}

Vec QuadraticCubicOracle::third(const Vec&, const Datum& z, const Vec& v, const Vec& w) const {
  QuadView q(z.input, d_);
  return q.kappa * q.w.dot(v) * q.w.dot(w) * q.w;
}

Problem quadratic_problem(const std::vector<QuadraticTerm>& terms, const Vec& init) {
  if (terms.empty()) throw Error(ErrorKind::InvalidArgument, "need at least one example");
  const int d = static_cast<int>(terms[0].g.size());
  std::vector<Datum> items;
  for (const auto& t : terms) {
    if (t.g.size() != d || t.A.rows() != d || t.A.cols() != d)
      throw Error(ErrorKind::InvalidArgument, "inconsistent quadratic term dimensions");
    items.push_back(QuadraticCubicOracle::pack(t.c, t.g, t.A, t.kappa, t.w));
  }
  Problem p;
  p.kind = "quadratic";
  p.oracle = std::make_shared<QuadraticCubicOracle>(d);
  p.data = Dataset(std::move(items));
  p.init = init.size() == d ? init : Vec(Vec::Zero(d));
  return p;
}

Problem least_squares_problem(const std::vector<Vec>& a, const Vec& y, double kappa,
                              const std::vector<Vec>& w, const Vec& init) {
  if (a.empty() || static_cast<long>(a.size()) != y.size())
    throw Error(ErrorKind::InvalidArgument, "a and y must have equal nonzero length");
  std::vector<QuadraticTerm> terms;
  for (size_t i = 0; i < a.size(); ++i) {
    QuadraticTerm t;
    t.c = 0.5 * y[static_cast<long>(i)] * y[static_cast<long>(i)];
    t.g = -y[static_cast<long>(i)] * a[i];
    t.A = a[i] * a[i].transpose();
    t.kappa = kappa;
    if (i < w.size()) t.w = w[i];
    terms.push_back(t);
  }
  Problem p = quadratic_problem(terms, init);
  p.kind = "least_squares";
  return p;
}

Problem scalar_quadratic_problem(int n) {
  std::vector<QuadraticTerm> terms(static_cast<size_t>(n));
  for (auto& t : terms) {
    t.g = Vec::Zero(1);
    t.A = Mat::Identity(1, 1);
  }
  Problem p = quadratic_problem(terms, Vec::Ones(1));
  p.kind = "scalar_quadratic";
  return p;
}

// ---- toy problem -------------------------------------------------------------

double ToyDiagonalOracle::value(const Vec& th, const Datum& z) const {
  const double r = th[0] * th[1] * z.input[0] - z.label[0];
  return r * r;
}

Vec ToyDiagonalOracle::gradient(const Vec& th, const Datum& z) const {
  const double x = z.input[0];
  const double r = th[0] * th[1] * x - z.label[0];
  Vec g(2);
  g << 2 * r * x * th[1], 2 * r * x * th[0];
  return g;
}

Mat ToyDiagonalOracle::hessian(const Vec& th, const Datum& z) const {
  const double x = z.input[0];
  const double r = th[0] * th[1] * x - z.label[0];
  Vec q(2);
  q << x * th[1], x * th[0];
  Mat J(2, 2);
  J << 0, x, x, 0;
  return 2 * q * q.transpose() + 2 * r * J;
}

Vec ToyDiagonalOracle::third(const Vec& th, const Datum& z, const Vec& v, const Vec& w) const {
  const double x = z.input[0];
  Vec q(2);
  q << x * th[1], x * th[0];
  Mat J(2, 2);
  J << 0, x, x, 0;
  return 2 * (J * v) * q.dot(w) + 2 * q * v.dot(J * w) + 2 * q.dot(v) * (J * w);
}

Problem toy_diagonal_problem() {
  std::vector<Datum> items;
  for (double y : {1.0, 2.0, 0.0}) {
    Datum z;
    z.input = Vec::Constant(1, 1.0);
    z.label = Vec::Constant(1, y);
    items.push_back(z);
  }
  Problem p;
  p.kind = "toy_diagonal";
  p.oracle = std::make_shared<ToyDiagonalOracle>();
  p.data = Dataset(std::move(items));
  p.init = Vec(2);
  p.init << 1, 6;
  p.reference_points = {Vec::Ones(2), -Vec::Ones(2)};
  p.notes = "f = theta1*theta2*x, D = {(1,1),(1,2),(1,0)}; minimum manifold theta1*theta2 = 1";
  return p;
}

// ---- W-shaped ReLU regression ------------------------------------------------

WReluOracle::WReluOracle(int width) : m_(width) {
  if (width < 1) throw Error(ErrorKind::InvalidArgument, "width must be >= 1");
}

double WReluOracle::predict(const Vec& th, double x) const {
  double f = th[3 * m_];
  for (int j = 0; j < m_; ++j) f += th[2 * m_ + j] * std::max(0.0, th[j] * x + th[m_ + j]);
  return f;
}

double WReluOracle::value(const Vec& th, const Datum& z) const {
  const double r = predict(th, z.input[0]) - z.label[0];
  return r * r;
}

Vec WReluOracle::gradient(const Vec& th, const Datum& z) const {
  const double x = z.input[0];
  const double r = predict(th, x) - z.label[0];
  Vec g = Vec::Zero(dim());
  for (int j = 0; j < m_; ++j) {
    const double pre = th[j] * x + th[m_ + j];
    const double act = pre > 0 ? 1.0 : 0.0;  // subgradient 0 at the kink
    g[j] = 2 * r * th[2 * m_ + j] * act * x;
    g[m_ + j] = 2 * r * th[2 * m_ + j] * act;
    g[2 * m_ + j] = 2 * r * std::max(0.0, pre);
  }
  g[3 * m_] = 2 * r;
  return g;
}

Vec w_relu_targets(const Vec& x) {
  Vec y(x.size());
  for (long i = 0; i < x.size(); ++i)
    y[i] = x[i] < 0 ? std::abs(2 * x[i] + 1) - 1 : std::abs(2 * x[i] - 1) - 1;
  return y;
}

Problem w_relu_problem(const WReluSpec& spec) {
  if (spec.width < 1) throw Error(ErrorKind::InvalidArgument, "width must be >= 1");
  if (spec.n < 2) throw Error(ErrorKind::InvalidArgument, "W dataset needs n >= 2");
  Vec x = Vec::LinSpaced(spec.n, -1.0, 1.0);
  Vec y = w_relu_targets(x);
  std::vector<Datum> items;
  for (int i = 0; i < spec.n; ++i) {
    Datum z;
    z.input = Vec::Constant(1, x[i]);
    z.label = Vec::Constant(1, y[i]);
    items.push_back(z);
  }
  Problem p;
  p.kind = "w_relu";
  p.oracle = std::make_shared<WReluOracle>(spec.width);
  p.data = Dataset(std::move(items));
  std::mt19937_64 rng(spec.init_seed);
  std::normal_distribution<double> gauss(0.0, spec.init_scale);
  p.init.resize(3 * spec.width + 1);
  for (long i = 0; i < p.init.size(); ++i) p.init[i] = gauss(rng);
  p.notes = "x evenly spaced on [-1,1]; y = |2x+1|-1 (x<0), |2x-1|-1 (x>=0)";
  return p;
}

// ---- softmax classifier ------------------------------------------------------

Vec SoftmaxOracle::probabilities(const Vec& th, const Vec& x) const {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> W(
      th.data(), classes_, features_);
  Vec logits = W * x;
  Vec p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

double SoftmaxOracle::value(const Vec& th, const Datum& z) const {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> W(
      th.data(), classes_, features_);
  Vec logits = W * z.input;
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return lse - logits[static_cast<long>(z.label[0])];
}

Vec SoftmaxOracle::gradient(const Vec& th, const Datum& z) const {
  Vec p = probabilities(th, z.input);
  p[static_cast<long>(z.label[0])] -= 1.0;
  Vec g(dim());
  for (int c = 0; c < classes_; ++c) g.segment(c * features_, features_) = p[c] * z.input;
  return g;
}

Mat SoftmaxOracle::hessian(const Vec& th, const Datum& z) const {
  Vec p = probabilities(th, z.input);
  Mat S = Mat(p.asDiagonal()) - p * p.transpose();
  Mat xx = z.input * z.input.transpose();
  Mat h(dim(), dim());
  for (int a = 0; a < classes_; ++a)
    for (int b = 0; b < classes_; ++b)
      h.block(a * features_, b * features_, features_, features_) = S(a, b) * xx;
  return h;
}

Problem softmax_problem(int classes, int features, const std::vector<Vec>& x,
                        const std::vector<int>& labels, const Vec& theta) {
  if (x.empty() || x.size() != labels.size())
    throw Error(ErrorKind::InvalidArgument, "inputs and labels must match");
  std::vector<Datum> items;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != features || labels[i] < 0 || labels[i] >= classes)
      throw Error(ErrorKind::InvalidArgument, "bad softmax example");
    Datum z;
    z.input = x[i];
    z.label = Vec::Constant(1, labels[i]);
    items.push_back(z);
  }
  Problem p;
  p.kind = "softmax";
  p.oracle = std::make_shared<SoftmaxOracle>(classes, features);
  p.data = Dataset(std::move(items));
  p.init = theta;
  return p;
}

Problem softmax_self_labeled_problem(const SoftmaxSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SoftmaxOracle model(spec.classes, spec.features);
  Vec theta(model.dim());
  for (long i = 0; i < theta.size(); ++i) theta[i] = spec.weight_scale * gauss(rng);
  std::vector<Vec> x;
  std::vector<int> labels;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < spec.n; ++i) {
    Vec xi(spec.features);
    for (int j = 0; j < spec.features; ++j) xi[j] = gauss(rng);
    Vec p = model.probabilities(theta, xi);
    double u = unif(rng), acc = 0;
    int y = spec.classes - 1;
    for (int c = 0; c < spec.classes; ++c) {
      acc += p[c];
      if (u < acc) {
        y = c;
        break;
      }
    }
    x.push_back(xi);
    labels.push_back(y);
  }
  Problem p = softmax_problem(spec.classes, spec.features, x, labels, theta);
  p.notes = "labels sampled from the model's predictive distribution at init";
  return p;
}

// ---- strict saddle -----------------------------------------------------------

Problem saddle_problem(const SaddleSpec& spec) {
  if (spec.n < 2) throw Error(ErrorKind::InvalidArgument, "saddle benchmark needs n >= 2");
  Vec q = Vec::LinSpaced(spec.n, -1.0, 1.0);
  q.array() -= q.mean();
  q /= std::sqrt(q.squaredNorm() / spec.n);
  std::vector<QuadraticTerm> terms;
  for (int i = 0; i < spec.n; ++i) {
    QuadraticTerm t;
    t.g = Vec(2);
    t.g << 0.0, spec.sigma_a * q[i];
    t.A = Mat(2, 2);
    t.A << -1.0, spec.beta * q[i], spec.beta * q[i], 1.0;
    if (spec.kappa != 0) {
      t.kappa = spec.kappa;
      t.w = Vec::Unit(2, 0);
    }
    terms.push_back(t);
  }
  Problem p = quadratic_problem(terms, Vec::Zero(2));
  p.kind = "saddle";
  p.notes = "strict saddle at 0: Hessian diag(-1, 1), u = sigma_a * beta along e_1";
  return p;
}

}  // namespace sgdwr
