#include "sgdwr/predictors.hpp"

#include <algorithm>
#include <cmath>

namespace sgdwr {

const char* to_string(ForecastKind k) {
  switch (k) {
    case ForecastKind::Strict: return "Strict";
    case ForecastKind::HighOrder: return "HighOrder";
    case ForecastKind::FlatTravel: return "FlatTravel";
  }
  return "?";
}

SaddleForecast flat_travel_epochs(double u, const Hyperparams& hyper) {
  hyper.check();
  if (u == 0) throw Error(ErrorKind::NoDriftDirection, "u = 0: no drift along v");
  const double c = hyper.c();
  return {u, 0.0, 2.0 * hyper.b / (hyper.eta * c * c * std::abs(u)), ForecastKind::FlatTravel};
}

SaddleForecast highorder_saddle_epochs(double u, const Hyperparams& hyper) {
  SaddleForecast f = flat_travel_epochs(u, hyper);
  f.kind = ForecastKind::HighOrder;
  return f;
}

SaddleForecast strict_saddle_epochs(double u, double lambda, const Hyperparams& hyper) {
  hyper.check();
  if (!(lambda < 0)) throw Error(ErrorKind::NotAStrictSaddle, "lambda must be negative");
  if (u == 0) throw Error(ErrorKind::NoDriftDirection, "u = 0: no drift along v");
  const double c = hyper.c();
  const double logs = std::log(hyper.eta) + std::log(std::abs(u)) + 2 * std::log(c) - std::log(hyper.b);
  return {u, lambda, 2 * logs / (c * lambda), ForecastKind::Strict};
}

EoSForecast eos_alpha(double lambda1, double lambda2, double u, double grad_norm, const Hyperparams& hyper) {
  hyper.check();
  std::string failed;
  if (!(lambda2 > 1 / hyper.eta)) failed += " lambda2 > 1/eta;";
  if (!(u > 0)) failed += " u > 0;";
  if (!(grad_norm > 0)) failed += " grad_norm > 0;";
  if (!(lambda1 >= lambda2)) failed += " lambda1 >= lambda2;";
  if (!failed.empty()) throw Error(ErrorKind::HypothesisNotMet, "violated:" + failed);
  const double c = hyper.c();
  EoSForecast f;
  f.lambda1 = lambda1;
  f.lambda2 = lambda2;
  f.u = u;
  f.grad_norm = grad_norm;
  f.alpha_eos = std::abs(std::log(c * c * lambda1 * lambda2 * grad_norm / u)) / c;
  f.threshold = 1 / hyper.eta + f.alpha_eos;
  f.breaks = lambda1 >= f.threshold;
  return f;
}

double eos_relative_margin(double eta, double c) {
  if (!(eta > 0) || !(c > 0)) throw Error(ErrorKind::InvalidArgument, "eta and c must be positive");
  return std::abs(std::log(eta)) / c;
}

double saddle_beta(double lambda, const Hyperparams& hyper, bool discrete) {
  hyper.check();
  const double c = hyper.c();
  if (lambda == 0) return -c;
  if (discrete) return (std::pow(1 - hyper.eta * lambda, hyper.k) - 1) / lambda;
  return std::expm1(-c * lambda) / lambda;
}

ClosedFormSaddlePath saddle_closed_form_path(double alpha, double beta, double lambda, double grad_component,
                                             int m_max) {
  if (m_max < 0) throw Error(ErrorKind::InvalidArgument, "m_max must be >= 0");
  ClosedFormSaddlePath path;
  path.alpha = alpha;
  path.beta = beta;
  path.lambda = lambda;
  path.grad_component = grad_component;
  const double lb = lambda * beta;
  // ((1 + lb)^m - 1)/lb with the lb -> 0 limit m
  auto growth = [&](int m) {
    if (std::abs(lb) < 1e-12) return static_cast<double>(m);
    return std::expm1(m * std::log1p(lb)) / lb;
  };
  double sq_steps = 0, prev = 0;
  for (int m = 0; m <= m_max; ++m) {
    SaddlePathRow r;
    r.m = m;
    const double gm = growth(m);
    r.regularizer_part = -gm * alpha;
    r.gd_part = gm * beta * grad_component;
    r.displacement = r.regularizer_part + r.gd_part;
    r.gradient_change = lambda * r.displacement;
    r.epoch_step = r.displacement - prev;
    sq_steps += r.epoch_step * r.epoch_step;
    r.loss_change = grad_component * r.displacement + 1.5 * lambda * sq_steps;
    prev = r.displacement;
    path.rows.push_back(r);
  }
  return path;
}

namespace {

double escape(const LossOracle& f, const Dataset& data, const Vec& theta_saddle, const Hyperparams& hyper,
              Policy policy, double loss_drop, int max_epochs, uint64_t seed, const NoiseSpec& noise,
              bool per_step) {
  if (!(loss_drop > 0)) throw Error(ErrorKind::InvalidArgument, "loss_drop must be > 0");
  const double L0 = eval_loss(f, theta_saddle, data);
  Vec theta = theta_saddle;
  for (int e = 1; e <= max_epochs; ++e) {
    BatchSchedule s = make_schedule(data.n(), hyper, policy, seed, static_cast<uint64_t>(e));
    if (per_step) {
      TrajectoryRecord rec = run_epoch(f, data, theta, s, hyper, noise, true);
      for (int t = 1; t <= hyper.k; ++t)
        if (L0 - rec.losses[static_cast<size_t>(t)] >= loss_drop)
          return (e - 1) + static_cast<double>(t) / hyper.k;
      theta = rec.thetas.back();
    } else {
      theta = run_epoch_endpoint(f, data, theta, s, hyper, noise);
      if (L0 - eval_loss(f, theta, data) >= loss_drop) return e;
    }
  }
  return max_epochs + 1;
}

}  // namespace

int measure_escape_epochs(const LossOracle& f, const Dataset& data, const Vec& theta_saddle,
                          const Hyperparams& hyper, Policy policy, double loss_drop, int max_epochs,
                          uint64_t seed, const NoiseSpec& noise) {
  return static_cast<int>(
      escape(f, data, theta_saddle, hyper, policy, loss_drop, max_epochs, seed, noise, false));
}

double measure_escape_time(const LossOracle& f, const Dataset& data, const Vec& theta_saddle,
                           const Hyperparams& hyper, Policy policy, double loss_drop, int max_epochs,
                           uint64_t seed, const NoiseSpec& noise) {
  return escape(f, data, theta_saddle, hyper, policy, loss_drop, max_epochs, seed, noise, true);
}

double median(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorKind::InvalidArgument, "median of empty set");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace sgdwr
