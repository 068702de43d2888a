#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgdwr/problem.hpp"

namespace sgdwr {

enum class Policy { WithoutReplacement, WithReplacement, ShuffleOnce, FullBatch, NoisedFullBatch };

const char* to_string(Policy p);
Policy policy_from_string(const std::string& s);  // throws InvalidArgument

struct BatchSchedule {
  std::vector<Batch> batches;
  Policy policy = Policy::WithoutReplacement;
  uint64_t seed = 0;
};

struct NoiseSpec {
  enum class Kind { None, GaussianIsotropic } kind = Kind::None;
  double sigma = 0.0;
};

struct TrajectoryRecord {
  std::vector<Vec> thetas;     // k + 1 entries
  std::vector<double> losses;  // full-dataset loss at each theta
  BatchSchedule schedule;
  Hyperparams hyper;
};

enum class GdReference { KSmallSteps, OneBigStep };

uint64_t splitmix64(uint64_t x);
uint64_t derive_seed(uint64_t seed, uint64_t stream);

// epoch selects the per-epoch stream for the fresh-shuffle policies; ShuffleOnce ignores it
BatchSchedule make_schedule(int n, const Hyperparams& hyper, Policy policy, uint64_t seed,
                            uint64_t epoch = 0);

TrajectoryRecord run_epoch(const LossOracle& f, const Dataset& data, const Vec& theta0,
                           const BatchSchedule& schedule, const Hyperparams& hyper,
                           const NoiseSpec& noise = {}, bool record_losses = true);

// endpoint only, no loss bookkeeping
Vec run_epoch_endpoint(const LossOracle& f, const Dataset& data, const Vec& theta0,
                       const BatchSchedule& schedule, const Hyperparams& hyper,
                       const NoiseSpec& noise = {});

Vec gd_endpoint(const LossOracle& f, const Dataset& data, const Vec& theta0, const Hyperparams& hyper,
                GdReference ref = GdReference::KSmallSteps);

Vec deviation_measured(const LossOracle& f, const Dataset& data, const Vec& theta0,
                       const BatchSchedule& schedule, const Hyperparams& hyper,
                       GdReference ref = GdReference::KSmallSteps);

Vec deviation_first_order(const LossOracle& f, const Dataset& data, const Vec& theta0,
                          const BatchSchedule& schedule, const Hyperparams& hyper);

}  // namespace sgdwr
