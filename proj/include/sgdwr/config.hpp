#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sgdwr/optimizers.hpp"

namespace sgdwr {

inline constexpr int kSchemaVersion = 1;

struct AnalysisToggles {
  bool bias_report = false;
  int bias_every = 1;
  std::string enumeration = "exact";  // exact | monte_carlo
  long mc_samples = 2000;
  bool predictors = false;
  double loss_drop = 1.0;
  int max_epochs = 200;
};

struct ExperimentConfig {
  nlohmann::json problem;
  std::optional<Vec> init;
  Hyperparams hyper;
  bool k_given = false;
  std::vector<Policy> policies{Policy::WithoutReplacement, Policy::FullBatch};
  int epochs = 1;
  std::vector<uint64_t> seeds{1};
  double noise_sigma = 0.0;
  std::string outputs;
  AnalysisToggles analysis;
  nlohmann::json raw;
};

// Strict parsing: unknown keys and wrong types throw Error(ConfigError) naming the key path.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
Problem build_problem(const nlohmann::json& spec);

// k defaults to floor(n/b) for the bound dataset
Hyperparams bind_hyper(const ExperimentConfig& cfg, const Problem& p);

}  // namespace sgdwr
