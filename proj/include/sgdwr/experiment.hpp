#pragma once

#include <ostream>
#include <string>

#include "json.hpp"
#include "sgdwr/bias.hpp"
#include "sgdwr/config.hpp"
#include "sgdwr/predictors.hpp"

namespace sgdwr {

inline constexpr const char* kVersion = "1.0.0";

uint64_t fnv1a64(const std::string& bytes);

// columns: step, epoch, theta_0..theta_{d-1}, loss; %.17g
void write_trajectory_csv(std::ostream& out, const std::vector<Vec>& thetas, const std::vector<double>& losses,
                          int steps_per_epoch);

nlohmann::json to_json(const Vec& v);
nlohmann::json to_json(const BiasReport& r);
nlohmann::json to_json(const SaddleForecast& f);
nlohmann::json to_json(const EoSForecast& f);

struct RunOptions {
  bool write_files = true;  // CSV trajectories + report.json into cfg.outputs when non-empty
  int threads = 0;          // 0: hardware concurrency
};

// Runs every (policy, seed) scenario; module errors are recorded per scenario and do not stop the run.
nlohmann::json run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

// Forecasts at theta (strict / flat / EoS as applicable) plus measured escape per policy when the
// Hessian has a negative eigenvalue.
nlohmann::json predictor_comparison(const Problem& p, const Vec& theta, const Hyperparams& hyper,
                                    const std::vector<Policy>& policies, const std::vector<uint64_t>& seeds,
                                    double loss_drop, int max_epochs);

}  // namespace sgdwr
