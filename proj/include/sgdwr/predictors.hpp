#pragma once

#include <cstdint>
#include <vector>

#include "sgdwr/optimizers.hpp"

namespace sgdwr {

enum class ForecastKind { Strict, HighOrder, FlatTravel };
const char* to_string(ForecastKind k);

struct SaddleForecast {
  double u = 0;
  double lambda = 0;
  double epochs_predicted = 0;
  ForecastKind kind = ForecastKind::Strict;
};

struct EoSForecast {
  double lambda1 = 0, lambda2 = 0;
  double u = 0;
  double grad_norm = 0;
  double alpha_eos = 0;
  double threshold = 0;  // 1/eta + alpha_eos
  bool breaks = false;   // lambda1 >= threshold
};

struct SaddlePathRow {
  int m = 0;
  double displacement = 0;     // theta_m - theta
  double regularizer_part = 0; // -(lambda beta)^{-1}((1+lambda beta)^m - 1) alpha
  double gd_part = 0;          // (lambda beta)^{-1}((1+lambda beta)^m - 1) beta grad
  double gradient_change = 0;  // grad L(theta_m) - grad L
  double loss_change = 0;
  double epoch_step = 0;       // theta_m - theta_{m-1}
};

struct ClosedFormSaddlePath {
  double alpha = 0;
  double beta = 0;
  double lambda = 0;
  double grad_component = 0;
  std::vector<SaddlePathRow> rows;  // m = 0..m_max
};

SaddleForecast flat_travel_epochs(double u, const Hyperparams& hyper);
SaddleForecast strict_saddle_epochs(double u, double lambda, const Hyperparams& hyper);
SaddleForecast highorder_saddle_epochs(double u, const Hyperparams& hyper);
EoSForecast eos_alpha(double lambda1, double lambda2, double u, double grad_norm, const Hyperparams& hyper);
// |ln eta| / c, the relative width of the EoS window
double eos_relative_margin(double eta, double c);

// beta = lambda^{-1}(exp(-c lambda) - 1); discrete: lambda^{-1}((1 - eta lambda)^k - 1)
double saddle_beta(double lambda, const Hyperparams& hyper, bool discrete = false);
ClosedFormSaddlePath saddle_closed_form_path(double alpha, double beta, double lambda, double grad_component,
                                             int m_max);

// Epoch (1-based) after which the full-batch loss has dropped by loss_drop below L(theta_saddle);
// max_epochs + 1 if it never does.
int measure_escape_epochs(const LossOracle& f, const Dataset& data, const Vec& theta_saddle,
                          const Hyperparams& hyper, Policy policy, double loss_drop, int max_epochs,
                          uint64_t seed, const NoiseSpec& noise = {});

// Same, resolved to the step: returns (first step index reaching the drop) / k, or max_epochs + 1.
double measure_escape_time(const LossOracle& f, const Dataset& data, const Vec& theta_saddle,
                           const Hyperparams& hyper, Policy policy, double loss_drop, int max_epochs,
                           uint64_t seed, const NoiseSpec& noise = {});

double median(std::vector<double> v);

}  // namespace sgdwr
