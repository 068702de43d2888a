#include <sstream>

#include "doctest.h"
#include "sgdwr/experiment.hpp"

using namespace sgdwr;
using nlohmann::json;

namespace {
json toy_config() {
  return json::parse(R"({
    "schema_version": 1,
    "problem": {"kind": "toy_diagonal"},
    "init": [3.0, 0.2],
    "hyper": {"eta": 0.01},
    "policies": ["WithoutReplacement", "WithReplacement", "FullBatch"],
    "epochs": 4,
    "seeds": [1, 2],
    "analysis": {"bias_report": true, "bias_every": 2}
  })");
}

std::string config_error(const json& j) {
  try {
    parse_config(j);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
    return e.what();
  }
  return "";
}
}  // namespace

TEST_CASE("FNV-1a") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("config parsing") {
  ExperimentConfig c = parse_config(toy_config());
  CHECK(c.policies.size() == 3);
  CHECK(c.seeds == std::vector<uint64_t>{1, 2});
  CHECK(!c.k_given);
  Problem p = build_problem(c.problem);
  CHECK(bind_hyper(c, p).k == 3);

  json j = toy_config();
  j["hyper"]["etaa"] = 1;
  CHECK(config_error(j).find("config.hyper.etaa") != std::string::npos);
  j = toy_config();
  j.erase("schema_version");
  CHECK(config_error(j).find("schema_version") != std::string::npos);
  j = toy_config();
  j["schema_version"] = 2;
  CHECK(!config_error(j).empty());
  j = toy_config();
  j["policies"] = {"Sometimes"};
  CHECK(config_error(j).find("config.policies[0]") != std::string::npos);
  j = toy_config();
  j["hyper"].erase("eta");
  CHECK(config_error(j).find("config.hyper.eta") != std::string::npos);
  j = toy_config();
  j["problem"] = {{"kind", "saddle"}, {"sigma", 1}};
  CHECK(config_error(j).find("problem.sigma") != std::string::npos);
}

TEST_CASE("trajectory CSV") {
  std::ostringstream out;
  Vec a(2), b(2);
  a << 1, 2;
  b << 0.1, 3;
  write_trajectory_csv(out, {a, b, b}, {0.5, 0.25, 0.125}, 2);
  CHECK(out.str() ==
        "step,epoch,theta_0,theta_1,loss\n"
        "0,0,1,2,0.5\n"
        "1,1,0.10000000000000001,3,0.25\n"
        "2,1,0.10000000000000001,3,0.125\n");
}

TEST_CASE("experiment report") {
  ExperimentConfig c = parse_config(toy_config());
  RunOptions one;
  one.write_files = false;
  one.threads = 1;
  RunOptions many = one;
  many.threads = 4;
  json r1 = run_experiment(c, one), r2 = run_experiment(c, many);
  CHECK(r1.dump() == r2.dump());
  CHECK(r1["provenance"]["config_hash"] == r2["provenance"]["config_hash"]);
  CHECK(r1["provenance"]["hyper"]["k"] == 3);
  REQUIRE(r1["scenarios"].size() == 6);
  const json& wor = r1["scenarios"][0];
  CHECK(wor["status"] == "ok");
  CHECK(wor["epochs_run"] == 4);
  CHECK(wor["bias_reports"].size() == 2);
  CHECK(wor["bias_reports"][0].contains("report"));
  CHECK(r1["scenarios"][2]["bias_reports"][0].contains("error"));  // WithReplacement
  CHECK(r1["analysis_label"] == "standard");
}

TEST_CASE("divergence is recorded per scenario") {
  json j = toy_config();
  j["hyper"]["eta"] = 5.0;
  j["epochs"] = 200;
  j.erase("analysis");
  RunOptions o;
  o.write_files = false;
  json r = run_experiment(parse_config(j), o);
  for (const auto& s : r["scenarios"]) {
    CHECK(s["status"] == "error");
    CHECK(s["error"]["kind"] == "DivergenceDetected");
    CHECK(s["error"]["step"].get<long>() > 0);
  }
}
