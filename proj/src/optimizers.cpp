#include "sgdwr/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace sgdwr {

const char* to_string(Policy p) {
  switch (p) {
    case Policy::WithoutReplacement: return "WithoutReplacement";
    case Policy::WithReplacement: return "WithReplacement";
    case Policy::ShuffleOnce: return "ShuffleOnce";
    case Policy::FullBatch: return "FullBatch";
    case Policy::NoisedFullBatch: return "NoisedFullBatch";
  }
  return "?";
}

Policy policy_from_string(const std::string& s) {
  for (Policy p : {Policy::WithoutReplacement, Policy::WithReplacement, Policy::ShuffleOnce,
                   Policy::FullBatch, Policy::NoisedFullBatch})
    if (s == to_string(p)) return p;
  throw Error(ErrorKind::InvalidArgument, "unknown policy '" + s + "'");
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

BatchSchedule make_schedule(int n, const Hyperparams& hyper, Policy policy, uint64_t seed,
                            uint64_t epoch) {
  hyper.check();
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
  BatchSchedule s;
  s.policy = policy;
  s.seed = seed;
  const int k = hyper.k, b = hyper.b;

  if (policy == Policy::FullBatch || policy == Policy::NoisedFullBatch) {
    Batch all(static_cast<size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    s.batches.assign(static_cast<size_t>(k), all);
    if (policy == Policy::NoisedFullBatch) s.seed = derive_seed(seed, epoch);
    return s;
  }

  if (policy == Policy::WithReplacement) {
    if (b > n) throw Error(ErrorKind::ScheduleInfeasible, "b > n");
    std::mt19937_64 rng(derive_seed(seed, epoch));
    std::vector<int> pool(static_cast<size_t>(n));
    for (int t = 0; t < k; ++t) {
      std::iota(pool.begin(), pool.end(), 0);
      // partial Fisher-Yates: b distinct indices
      for (int j = 0; j < b; ++j) {
        std::uniform_int_distribution<int> pick(j, n - 1);
        std::swap(pool[static_cast<size_t>(j)], pool[static_cast<size_t>(pick(rng))]);
      }
      Batch batch(pool.begin(), pool.begin() + b);
      std::sort(batch.begin(), batch.end());
      s.batches.push_back(std::move(batch));
    }
    return s;
  }

  if (static_cast<long>(k) * b > n)
    throw Error(ErrorKind::ScheduleInfeasible,
                "k*b = " + std::to_string(long(k) * b) + " exceeds n = " + std::to_string(n));
  const uint64_t stream = policy == Policy::ShuffleOnce ? 0 : epoch;
  std::mt19937_64 rng(derive_seed(seed, stream));
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  // batches are sets; canonical sorted order keeps reductions reproducible
  for (int t = 0; t < k; ++t) {
    auto first = perm.begin() + static_cast<long>(t) * b;
    Batch batch(first, first + b);
    std::sort(batch.begin(), batch.end());
    s.batches.push_back(std::move(batch));
  }
  return s;
}

namespace {

void guard(const Vec& theta, long step) {
  if (!theta.allFinite() || theta.norm() > 1e12)
    throw Error(ErrorKind::DivergenceDetected, "parameters diverged at step " + std::to_string(step),
                step);
}

template <class OnStep>
Vec integrate(const LossOracle& f, const Dataset& data, const Vec& theta0,
              const BatchSchedule& schedule, const Hyperparams& hyper, const NoiseSpec& noise,
              OnStep&& on_step) {
  hyper.check();
  if (static_cast<int>(schedule.batches.size()) != hyper.k)
    throw Error(ErrorKind::InvalidArgument, "schedule length differs from k");
  const bool noisy = noise.kind == NoiseSpec::Kind::GaussianIsotropic && noise.sigma > 0;
  std::mt19937_64 rng(derive_seed(schedule.seed, 0x6e6f697365ULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec theta = theta0;
  long step = 0;
  for (const Batch& batch : schedule.batches) {
    Vec g = grad(f, theta, data, batch);
    if (noisy)
      for (int i = 0; i < g.size(); ++i) g[i] += noise.sigma * gauss(rng);
    theta -= hyper.eta * g;
    ++step;
    guard(theta, step);
    on_step(theta);
  }
  return theta;
}

}  // namespace

TrajectoryRecord run_epoch(const LossOracle& f, const Dataset& data, const Vec& theta0,
                           const BatchSchedule& schedule, const Hyperparams& hyper,
                           const NoiseSpec& noise, bool record_losses) {
  TrajectoryRecord rec;
  rec.schedule = schedule;
  rec.hyper = hyper;
  rec.thetas.push_back(theta0);
  if (record_losses) rec.losses.push_back(eval_loss(f, theta0, data));
  integrate(f, data, theta0, schedule, hyper, noise, [&](const Vec& th) {
    rec.thetas.push_back(th);
    if (record_losses) rec.losses.push_back(eval_loss(f, th, data));
  });
  return rec;
}

Vec run_epoch_endpoint(const LossOracle& f, const Dataset& data, const Vec& theta0,
                       const BatchSchedule& schedule, const Hyperparams& hyper,
                       const NoiseSpec& noise) {
  return integrate(f, data, theta0, schedule, hyper, noise, [](const Vec&) {});
}

Vec gd_endpoint(const LossOracle& f, const Dataset& data, const Vec& theta0, const Hyperparams& hyper,
                GdReference ref) {
  if (ref == GdReference::OneBigStep) {
    Vec th = theta0 - hyper.c() * grad(f, theta0, data);
    guard(th, 1);
    return th;
  }
  BatchSchedule gd = make_schedule(data.n(), hyper, Policy::FullBatch, 0);
  return run_epoch_endpoint(f, data, theta0, gd, hyper);
}

Vec deviation_measured(const LossOracle& f, const Dataset& data, const Vec& theta0,
                       const BatchSchedule& schedule, const Hyperparams& hyper, GdReference ref) {
  return run_epoch_endpoint(f, data, theta0, schedule, hyper) - gd_endpoint(f, data, theta0, hyper, ref);
}

Vec deviation_first_order(const LossOracle& f, const Dataset& data, const Vec& theta0,
                          const BatchSchedule& schedule, const Hyperparams& hyper) {
  if (static_cast<int>(schedule.batches.size()) != hyper.k)
    throw Error(ErrorKind::InvalidArgument, "schedule length differs from k");
  const int d = f.dim();
  const double eta = hyper.eta;
  const Mat I = Mat::Identity(d, d);
  // linearised recursion delta_t = (I - eta A_t) delta_{t-1} - eta g_t with everything at theta0;
  // this equals -eta sum g_i + alpha_k of the fixed-batch expansion
  Vec dev = Vec::Zero(d);
  for (const Batch& batch : schedule.batches) {
    Vec g = grad(f, theta0, data, batch);
    Mat A = hessian(f, theta0, data, batch);
    dev = (I - eta * A) * dev - eta * g;
  }
  const Vec gbar = grad(f, theta0, data);
  const Mat Abar = hessian(f, theta0, data);
  Vec ref = Vec::Zero(d);
  for (int t = 0; t < hyper.k; ++t) ref = (I - eta * Abar) * ref - eta * gbar;
  return dev - ref;
}

}  // namespace sgdwr
