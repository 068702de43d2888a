#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sgdwr/checks.hpp"
#include "sgdwr/experiment.hpp"

using namespace sgdwr;
using nlohmann::json;

namespace {

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// "11/3" when x is a small-denominator rational, else empty
std::string as_fraction(double x) {
  for (long den = 1; den <= 1000; ++den) {
    const double num = std::round(x * den);
    if (std::abs(num / den - x) <= 1e-12 * std::max(1.0, std::abs(x)))
      return den == 1 ? std::to_string(static_cast<long>(num))
                      : std::to_string(static_cast<long>(num)) + "/" + std::to_string(den);
  }
  return "";
}

struct Common {
  std::string config, out, format;  // empty: command default
  uint64_t seed = 0;
  bool seed_given = false;
};

ExperimentConfig load(const Common& o) {
  if (o.config.empty()) throw Error(ErrorKind::ConfigError, "--config is required");
  ExperimentConfig c = load_config(o.config);
  if (o.seed_given) c.seeds = {o.seed};
  if (!o.out.empty()) c.outputs = o.out;
  return c;
}

Vec start_point(const ExperimentConfig& c, const Problem& p) { return c.init ? *c.init : p.init; }

int cmd_simulate(const Common& o) {
  ExperimentConfig c = load(o);
  c.analysis.bias_report = false;
  c.analysis.predictors = false;
  json r = run_experiment(c);
  if (o.format == "csv") {
    std::cout << "policy,seed,status,epochs_run,final_loss,final_theta\n";
    for (const auto& s : r["scenarios"]) {
      std::cout << s["policy"].get<std::string>() << ',' << s["seed"] << ',' << s["status"].get<std::string>()
                << ',' << s["epochs_run"] << ',' << s["final_loss"] << ",\"";
      for (size_t i = 0; i < s["final_theta"].size(); ++i) std::cout << (i ? " " : "") << s["final_theta"][i];
      std::cout << "\"\n";
    }
  } else {
    std::cout << r.dump(2) << '\n';
  }
  return 0;
}

int cmd_bias(const Common& o) {
  ExperimentConfig c = load(o);
  const Problem p = build_problem(c.problem);
  const Hyperparams h = bind_hyper(c, p);
  const Vec theta = start_point(c, p);
  EmpiricalMode mode;
  mode.exact = c.analysis.enumeration == "exact";
  mode.samples = c.analysis.mc_samples;
  mode.seed = c.seeds.front();
  json out = json::array();
  for (Policy pol : c.policies) {
    json e{{"policy", to_string(pol)}};
    try {
      e["report"] = to_json(bias_report(*p.oracle, theta, p.data, h, pol, mode));
    } catch (const Error& err) {
      e["error"] = {{"kind", to_string(err.kind())}, {"message", err.what()}};
    }
    out.push_back(e);
  }
  if (o.format == "csv") {
    std::cout << "policy,component,predicted,empirical,stderr\n";
    for (const auto& e : out) {
      if (!e.contains("report")) continue;
      const auto& r = e["report"];
      for (size_t i = 0; i < r["predicted_step"].size(); ++i)
        std::cout << e["policy"].get<std::string>() << ',' << i << ',' << r["predicted_step"][i] << ','
                  << r["empirical_step"][i] << ',' << r["empirical_stderr"][i] << '\n';
    }
  } else {
    std::cout << out.dump(2) << '\n';
  }
  return 0;
}

int cmd_enumerate(const Common& o, const std::vector<double>& values, int k) {
  if (values.empty()) throw Error(ErrorKind::ConfigError, "--values must list at least one number");
  const int n = static_cast<int>(values.size());
  if (k < 1 || k > n) throw Error(ErrorKind::ConfigError, "--k must satisfy 1 <= k <= number of values");
  FunctionSequence fs;
  fs.values.resize(static_cast<size_t>(k));
  for (auto& row : fs.values)
    for (double x : values) row.push_back(Mat::Constant(1, 1, x));
  const double e = expectation_enumerated(fs).value(0, 0);
  const double full = expectation_closed_form(build_moment_table(fs, k), k, n, kFullOrder).value(0, 0);
  const double pair = expectation_closed_form(build_moment_table(fs, std::min(k, 2)), k, n, 2).value(0, 0);
  if (o.format == "csv") {
    std::cout << "method,value,fraction\n"
              << "enumerated," << g17(e) << ',' << as_fraction(e) << '\n'
              << "closed_form_full," << g17(full) << ',' << as_fraction(full) << '\n'
              << "closed_form_order2," << g17(pair) << ',' << as_fraction(pair) << '\n';
  } else {
    json j{{"n", n},
           {"k", k},
           {"enumerated", {{"value", e}, {"fraction", as_fraction(e)}}},
           {"closed_form_full", {{"value", full}, {"fraction", as_fraction(full)}}},
           {"closed_form_order2", {{"value", pair}, {"fraction", as_fraction(pair)}}}};
    std::cout << j.dump(2) << '\n';
  }
  return 0;
}

int cmd_predict(const Common& o) {
  ExperimentConfig c = load(o);
  const Problem p = build_problem(c.problem);
  const Hyperparams h = bind_hyper(c, p);
  json r = predictor_comparison(p, start_point(c, p), h, c.policies, c.seeds, c.analysis.loss_drop,
                                c.analysis.max_epochs);
  if (o.format == "csv") {
    const json& s = r["strict_saddle"];
    const std::string predicted = s.contains("epochs_predicted") ? s["epochs_predicted"].dump() : "";
    std::cout << "policy,predicted_epochs,median_escape_time,median_escape_epochs\n";
    for (const auto& m : r["measured_escape"])
      std::cout << m["policy"].get<std::string>() << ',' << predicted << ','
                << (m.contains("median_escape_time") ? m["median_escape_time"].dump() : "") << ','
                << (m.contains("median_escape_epochs") ? m["median_escape_epochs"].dump() : "") << '\n';
  } else {
    std::cout << r.dump(2) << '\n';
  }
  return 0;
}

int cmd_experiment(const Common& o) {
  json r = run_experiment(load(o));
  std::cout << r.dump(2) << '\n';
  return 0;
}

int cmd_validate(const Common& o) {
  int failed = 0;
  json all = json::array();
  validation_suite([&](const CheckResult& r) {
    failed += !r.pass;
    if (o.format == "json")
      all.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}, {"seconds", r.seconds}});
    else
      std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << " (" << r.seconds << " s):" << r.detail << std::endl;
  });
  if (o.format == "json") std::cout << all.dump(2) << '\n';
  else std::cout << (failed ? std::to_string(failed) + " check(s) failed" : "all checks passed") << '\n';
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Without-replacement SGD bias toolkit"};
  app.require_subcommand(1);
  Common o;
  std::vector<double> values{1, 2, 3};
  int k = 2;

  auto add_common = [&](CLI::App* sub, bool config) {
    if (config) sub->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "override the config's seed list with one seed")
        ->each([&](const std::string&) { o.seed_given = true; });
    sub->add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  };
  auto* simulate = app.add_subcommand("simulate", "run the configured policies and emit trajectories");
  auto* bias = app.add_subcommand("bias", "predicted vs empirical deviation at the initial point");
  auto* enumerate = app.add_subcommand("enumerate", "expectation-engine oracle comparison");
  auto* predict = app.add_subcommand("predict", "saddle/EoS forecasts vs measured escape");
  auto* experiment = app.add_subcommand("experiment", "full config-driven run");
  auto* validate = app.add_subcommand("validate", "run the built-in invariant suite");
  for (auto* s : {simulate, bias, predict, experiment}) add_common(s, true);
  add_common(enumerate, false);
  add_common(validate, false);
  enumerate->add_option("--values", values, "dataset of scalars (identity functions)")->delimiter(',');
  enumerate->add_option("--k", k, "sequence length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*bias) return cmd_bias(o);
    if (*enumerate) return cmd_enumerate(o, values, k);
    if (*predict) return cmd_predict(o);
    if (*experiment) return cmd_experiment(o);
    if (*validate) return cmd_validate(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
