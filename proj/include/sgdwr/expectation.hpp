#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sgdwr/optimizers.hpp"

namespace sgdwr {

inline constexpr double kEnumerationBudget = 1e7;
inline constexpr int kFullOrder = -1;

// values[i][z] = f_i(z), shapes chaining left to right
struct FunctionSequence {
  std::vector<std::vector<Mat>> values;

  int k() const { return static_cast<int>(values.size()); }
  int n() const { return values.empty() ? 0 : static_cast<int>(values[0].size()); }
  void check() const;  // throws InvalidArgument on inconsistent shapes
};

enum class EstimateMethod { Enumeration, MonteCarlo, ClosedForm };
const char* to_string(EstimateMethod m);

struct ExpectationEstimate {
  Mat value;
  EstimateMethod method = EstimateMethod::Enumeration;
  int order = 0;  // ClosedForm only: 2 or kFullOrder
  Mat stderr_;    // zero except MonteCarlo
  long samples = 0;
};

// A set partition of {0..k-1} encoded as a restricted growth string.
using SetPartition = std::vector<int>;
std::vector<SetPartition> set_partitions(int k, int max_block = 1 << 30);

struct MomentTable {
  int k = 0;
  int n = 0;
  int max_order = 0;
  std::vector<Mat> means;
  // E over independent z_B per block B of the ordered product prod_i f_i(z_{block(i)})
  std::map<SetPartition, Mat> partition_moments;
};

MomentTable build_moment_table(const FunctionSequence& fs, int max_order);

double tuple_count(int n, int k);
void for_each_tuple(int n, int k, const std::function<void(const std::vector<int>&)>& visit,
                    double budget = kEnumerationBudget);
std::vector<std::vector<int>> enumerate_tuples(int n, int k, double budget = kEnumerationBudget);

ExpectationEstimate expectation_enumerated(const FunctionSequence& fs,
                                           double budget = kEnumerationBudget);
ExpectationEstimate expectation_closed_form(const MomentTable& moments, int k, int n, int order);

// schedules of a policy, each equally likely
double schedule_count(int n, const Hyperparams& hyper, Policy policy);
void for_each_schedule(int n, const Hyperparams& hyper, Policy policy,
                       const std::function<void(const BatchSchedule&)>& visit,
                       double budget = kEnumerationBudget);

ExpectationEstimate exact_expected_deviation(const LossOracle& f, const Dataset& data, const Vec& theta0,
                                             const Hyperparams& hyper, Policy policy,
                                             double budget = kEnumerationBudget,
                                             GdReference ref = GdReference::KSmallSteps);

// stratified: when samples equals the number of schedules, each schedule is visited once
ExpectationEstimate mc_expected_deviation(const LossOracle& f, const Dataset& data, const Vec& theta0,
                                          const Hyperparams& hyper, Policy policy, long samples,
                                          uint64_t seed, bool stratified = false,
                                          const NoiseSpec& noise = {},
                                          GdReference ref = GdReference::KSmallSteps);

}  // namespace sgdwr
