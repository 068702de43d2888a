#include "sgdwr/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

namespace sgdwr {

using nlohmann::json;

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string hex64(uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// non-finite values are not representable in JSON
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct Scenario {
  Policy policy;
  uint64_t seed;
  json result;
  std::vector<Vec> thetas;
  std::vector<double> losses;
};

void run_scenario(const ExperimentConfig& cfg, const Problem& p, const Hyperparams& h, const Vec& init,
                  Scenario& sc) {
  json& r = sc.result;
  r["policy"] = to_string(sc.policy);
  r["seed"] = sc.seed;
  r["bias_reports"] = json::array();
  const LossOracle& f = *p.oracle;
  NoiseSpec noise;
  if (sc.policy == Policy::NoisedFullBatch) {
    noise.kind = NoiseSpec::Kind::GaussianIsotropic;
    noise.sigma = cfg.noise_sigma;
  }
  Vec theta = init;
  sc.thetas = {theta};
  int epochs_run = 0;
  try {
    sc.losses = {eval_loss(f, theta, p.data)};
    for (int e = 1; e <= cfg.epochs; ++e) {
      if (cfg.analysis.bias_report && (e - 1) % cfg.analysis.bias_every == 0) {
        json entry;
        entry["epoch"] = e;
        try {
          EmpiricalMode mode;
          mode.exact = cfg.analysis.enumeration == "exact";
          mode.samples = cfg.analysis.mc_samples;
          mode.seed = derive_seed(sc.seed, static_cast<uint64_t>(e));
          entry["report"] = to_json(bias_report(f, theta, p.data, h, sc.policy, mode));
        } catch (const Error& err) {
          entry["error"] = {{"kind", to_string(err.kind())}, {"message", err.what()}};
        }
        r["bias_reports"].push_back(entry);
      }
      BatchSchedule s = make_schedule(p.data.n(), h, sc.policy, sc.seed, static_cast<uint64_t>(e));
      TrajectoryRecord rec = run_epoch(f, p.data, theta, s, h, noise, true);
      for (int t = 1; t <= h.k; ++t) {
        sc.thetas.push_back(rec.thetas[static_cast<size_t>(t)]);
        sc.losses.push_back(rec.losses[static_cast<size_t>(t)]);
      }
      theta = rec.thetas.back();
      epochs_run = e;
    }
    r["status"] = "ok";
  } catch (const Error& err) {
    r["status"] = "error";
    r["error"] = {{"kind", to_string(err.kind())}, {"message", err.what()}, {"step", err.step()}};
  }
  r["epochs_run"] = epochs_run;
  r["final_theta"] = to_json(theta);
  r["final_loss"] = num(sc.losses.empty() ? NAN : sc.losses.back());
  if (!p.reference_points.empty()) {
    double best = INFINITY;
    for (const Vec& ref : p.reference_points) best = std::min(best, (theta - ref).norm());
    r["distance_to_reference"] = num(best);
  }
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const std::vector<Vec>& thetas, const std::vector<double>& losses,
                          int steps_per_epoch) {
  if (thetas.empty()) return;
  out << "step,epoch";
  for (long i = 0; i < thetas[0].size(); ++i) out << ",theta_" << i;
  out << ",loss\n";
  for (size_t s = 0; s < thetas.size(); ++s) {
    const long epoch = s == 0 ? 0 : static_cast<long>((s - 1) / static_cast<size_t>(steps_per_epoch)) + 1;
    out << s << ',' << epoch;
    for (long i = 0; i < thetas[s].size(); ++i) out << ',' << fmt17(thetas[s][i]);
    out << ',' << (s < losses.size() ? fmt17(losses[s]) : "nan") << '\n';
  }
}

json to_json(const Vec& v) {
  json a = json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

json to_json(const BiasReport& r) {
  return {{"predicted_step", to_json(r.predicted_step)},
          {"empirical_step", to_json(r.empirical_step)},
          {"empirical_stderr", to_json(r.empirical_stderr)},
          {"empirical_method", r.empirical_method},
          {"samples", r.samples},
          {"residual_norm", num(r.residual_norm)},
          {"gradient_scale", num(r.gradient_scale)},
          {"error_bound", num(r.error_bound)}};
}

json to_json(const SaddleForecast& f) {
  return {{"kind", to_string(f.kind)}, {"u", num(f.u)}, {"lambda", num(f.lambda)},
          {"epochs_predicted", num(f.epochs_predicted)}};
}

json to_json(const EoSForecast& f) {
  return {{"lambda1", num(f.lambda1)},     {"lambda2", num(f.lambda2)},     {"u", num(f.u)},
          {"grad_norm", num(f.grad_norm)}, {"alpha_eos", num(f.alpha_eos)}, {"threshold", num(f.threshold)},
          {"breaks", f.breaks}};
}

json predictor_comparison(const Problem& p, const Vec& theta, const Hyperparams& h,
                          const std::vector<Policy>& policies, const std::vector<uint64_t>& seeds,
                          double loss_drop, int max_epochs) {
  const LossOracle& f = *p.oracle;
  json out;
  auto guarded = [&](const char* key, auto&& fn) {
    try {
      out[key] = fn();
    } catch (const Error& e) {
      out[key] = {{"error", {{"kind", to_string(e.kind())}, {"message", e.what()}}}};
    }
  };
  HessianSpectrum sp = hessian_spectrum(f, theta, p.data);
  const long d = sp.values.size();
  out["hessian_eigenvalues"] = to_json(sp.values);
  const Vec v_min = sp.vectors.col(d - 1);
  const double lam_min = sp.values[d - 1];
  const double u_min = overlap_u(f, theta, p.data, v_min).u;

  long flat = 0;
  for (long i = 1; i < d; ++i)
    if (std::abs(sp.values[i]) < std::abs(sp.values[flat])) flat = i;
  const double u_flat = overlap_u(f, theta, p.data, sp.vectors.col(flat)).u;

  guarded("strict_saddle", [&] { return to_json(strict_saddle_epochs(u_min, lam_min, h)); });
  guarded("flat_travel", [&] { return to_json(flat_travel_epochs(u_flat, h)); });
  guarded("eos", [&] {
    const double l1 = sp.values[0], l2 = d > 1 ? sp.values[1] : sp.values[0];
    const double u1 = overlap_u(f, theta, p.data, sp.vectors.col(0)).u;
    return to_json(eos_alpha(l1, l2, u1, grad(f, theta, p.data).norm(), h));
  });

  json measured = json::array();
  if (lam_min < 0) {
    for (Policy pol : policies) {
      json m;
      m["policy"] = to_string(pol);
      try {
        std::vector<double> times, epochs;
        for (uint64_t s : seeds) {
          times.push_back(measure_escape_time(f, p.data, theta, h, pol, loss_drop, max_epochs, s));
          epochs.push_back(measure_escape_epochs(f, p.data, theta, h, pol, loss_drop, max_epochs, s));
        }
        m["median_escape_time"] = median(times);
        m["median_escape_epochs"] = median(epochs);
        m["never_escaped"] = std::count(epochs.begin(), epochs.end(), max_epochs + 1.0);
      } catch (const Error& e) {
        m["error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
      }
      measured.push_back(m);
    }
  }
  out["measured_escape"] = measured;
  out["loss_drop"] = loss_drop;
  out["max_epochs"] = max_epochs;
  return out;
}

json run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  const Problem p = build_problem(cfg.problem);
  const Hyperparams h = bind_hyper(cfg, p);
  const Vec init = cfg.init ? *cfg.init : p.init;
  if (init.size() != p.oracle->dim())
    throw Error(ErrorKind::ConfigError, "config.init: expected " + std::to_string(p.oracle->dim()) + " entries");

  std::vector<Scenario> scenarios;
  for (Policy pol : cfg.policies)
    for (uint64_t s : cfg.seeds) scenarios.push_back({pol, s, json::object(), {}, {}});

  // scenarios are independent; results land in their own slots, so the report order is fixed
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next++) < scenarios.size();) run_scenario(cfg, p, h, init, scenarios[i]);
  };
  unsigned nthreads = opts.threads > 0 ? static_cast<unsigned>(opts.threads)
                                       : std::max(1u, std::thread::hardware_concurrency());
  nthreads = std::min<unsigned>(nthreads, static_cast<unsigned>(scenarios.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  json report;
  report["provenance"] = {{"config_hash", hex64(fnv1a64(cfg.raw.dump()))},
                          {"seeds", cfg.seeds},
                          {"version", kVersion},
                          {"problem", p.kind},
                          {"problem_notes", p.notes},
                          {"hyper", {{"eta", cfg.hyper.eta}, {"k", h.k}, {"b", h.b}, {"c", h.c()}}},
                          {"dim", p.oracle->dim()},
                          {"n", p.data.n()}};
  // ReLU kinks make the derivative-based analysis approximate
  report["analysis_label"] = p.kind == "w_relu" ? "heuristic" : "standard";
  report["scenarios"] = json::array();

  const bool files = opts.write_files && !cfg.outputs.empty();
  if (files) std::filesystem::create_directories(cfg.outputs);
  for (Scenario& sc : scenarios) {
    if (files && !sc.thetas.empty()) {
      const std::string name = std::string("trajectory_") + to_string(sc.policy) + "_seed" +
                               std::to_string(sc.seed) + ".csv";
      std::ofstream csv(std::filesystem::path(cfg.outputs) / name);
      write_trajectory_csv(csv, sc.thetas, sc.losses, h.k);
      sc.result["trajectory_file"] = name;
    }
    report["scenarios"].push_back(sc.result);
  }

  if (cfg.analysis.predictors) {
    try {
      report["predictors"] = predictor_comparison(p, init, h, cfg.policies, cfg.seeds, cfg.analysis.loss_drop,
                                                  cfg.analysis.max_epochs);
    } catch (const Error& e) {
      report["predictors"] = {{"error", {{"kind", to_string(e.kind())}, {"message", e.what()}}}};
    }
  }

  if (files) {
    std::ofstream out(std::filesystem::path(cfg.outputs) / "report.json");
    out << report.dump(2) << '\n';
  }
  return report;
}

}  // namespace sgdwr
