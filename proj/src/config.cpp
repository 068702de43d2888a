#include "sgdwr/config.hpp"

#include <fstream>
#include <set>

#include "sgdwr/problems.hpp"

namespace sgdwr {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::ConfigError, path + ": " + what);
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(path, "expected an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) fail(path + "." + it.key(), "unknown key");
}

double get_num(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

long get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<long>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  return j.get<bool>();
}

Vec get_vec(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  Vec v(static_cast<long>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<long>(i)] = get_num(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Mat get_mat(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
  const long r = static_cast<long>(j.size());
  Vec first = get_vec(j[0], path + "[0]");
  Mat m(r, first.size());
  for (long i = 0; i < r; ++i) {
    Vec row = get_vec(j[static_cast<size_t>(i)], path + "[" + std::to_string(i) + "]");
    if (row.size() != first.size()) fail(path, "ragged matrix");
    m.row(i) = row.transpose();
  }
  return m;
}

template <class T>
T opt(const json& j, const char* key, const std::string& path, T def, T (*get)(const json&, const std::string&)) {
  return j.contains(key) ? get(j[key], path + "." + key) : def;
}

}  // namespace

Problem build_problem(const json& spec) {
  const std::string path = "problem";
  if (!spec.is_object() || !spec.contains("kind") || !spec["kind"].is_string())
    fail(path + ".kind", "missing problem kind");
  const std::string kind = spec["kind"];
  try {
    if (kind == "toy_diagonal") {
      allow_keys(spec, path, {"kind"});
      return toy_diagonal_problem();
    }
    if (kind == "scalar_quadratic") {
      allow_keys(spec, path, {"kind", "n"});
      return scalar_quadratic_problem(static_cast<int>(opt<long>(spec, "n", path, 1, get_int)));
    }
    if (kind == "w_relu") {
      allow_keys(spec, path, {"kind", "width", "n", "init_seed", "init_scale"});
      WReluSpec s;
      s.width = static_cast<int>(opt<long>(spec, "width", path, s.width, get_int));
      s.n = static_cast<int>(opt<long>(spec, "n", path, s.n, get_int));
      s.init_seed = static_cast<uint64_t>(opt<long>(spec, "init_seed", path, 1, get_int));
      s.init_scale = opt<double>(spec, "init_scale", path, s.init_scale, get_num);
      return w_relu_problem(s);
    }
    if (kind == "softmax_self_labeled") {
      allow_keys(spec, path, {"kind", "classes", "features", "n", "seed", "weight_scale"});
      SoftmaxSpec s;
      s.classes = static_cast<int>(opt<long>(spec, "classes", path, s.classes, get_int));
      s.features = static_cast<int>(opt<long>(spec, "features", path, s.features, get_int));
      s.n = static_cast<int>(opt<long>(spec, "n", path, s.n, get_int));
      s.seed = static_cast<uint64_t>(opt<long>(spec, "seed", path, 1, get_int));
      s.weight_scale = opt<double>(spec, "weight_scale", path, s.weight_scale, get_num);
      return softmax_self_labeled_problem(s);
    }
    if (kind == "saddle") {
      allow_keys(spec, path, {"kind", "n", "sigma_a", "beta", "kappa"});
      SaddleSpec s;
      s.n = static_cast<int>(opt<long>(spec, "n", path, s.n, get_int));
      s.sigma_a = opt<double>(spec, "sigma_a", path, s.sigma_a, get_num);
      s.beta = opt<double>(spec, "beta", path, s.beta, get_num);
      s.kappa = opt<double>(spec, "kappa", path, s.kappa, get_num);
      return saddle_problem(s);
    }
    if (kind == "quadratic") {
      allow_keys(spec, path, {"kind", "examples"});
      if (!spec.contains("examples") || !spec["examples"].is_array())
        fail(path + ".examples", "expected an array");
      std::vector<QuadraticTerm> terms;
      for (size_t i = 0; i < spec["examples"].size(); ++i) {
        const json& e = spec["examples"][i];
        const std::string ep = path + ".examples[" + std::to_string(i) + "]";
        allow_keys(e, ep, {"c", "g", "A", "kappa", "w"});
        if (!e.contains("g") || !e.contains("A")) fail(ep, "needs g and A");
        QuadraticTerm t;
        t.c = opt<double>(e, "c", ep, 0.0, get_num);
        t.g = get_vec(e["g"], ep + ".g");
        t.A = get_mat(e["A"], ep + ".A");
        t.kappa = opt<double>(e, "kappa", ep, 0.0, get_num);
        if (e.contains("w")) t.w = get_vec(e["w"], ep + ".w");
        terms.push_back(t);
      }
      return quadratic_problem(terms, Vec());
    }
    if (kind == "least_squares") {
      allow_keys(spec, path, {"kind", "a", "y", "kappa", "w"});
      if (!spec.contains("a") || !spec.contains("y")) fail(path, "needs a and y");
      Mat a = get_mat(spec["a"], path + ".a");
      Vec y = get_vec(spec["y"], path + ".y");
      std::vector<Vec> rows, ws;
      for (long i = 0; i < a.rows(); ++i) rows.push_back(a.row(i).transpose());
      if (spec.contains("w")) {
        Mat w = get_mat(spec["w"], path + ".w");
        for (long i = 0; i < w.rows(); ++i) ws.push_back(w.row(i).transpose());
      }
      return least_squares_problem(rows, y, opt<double>(spec, "kappa", path, 0.0, get_num), ws, Vec());
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    fail(path, e.what());
  }
  fail(path + ".kind", "unknown problem kind '" + kind + "'");
}

ExperimentConfig parse_config(const json& j) {
  allow_keys(j, "config", {"schema_version", "problem", "init", "hyper", "policies", "epochs", "seeds",
                           "noise_sigma", "outputs", "analysis"});
  if (!j.contains("schema_version")) fail("config.schema_version", "missing");
  if (get_int(j["schema_version"], "config.schema_version") != kSchemaVersion)
    fail("config.schema_version", "unsupported version (expected 1)");
  if (!j.contains("problem")) fail("config.problem", "missing");
  if (!j.contains("hyper")) fail("config.hyper", "missing");

  ExperimentConfig c;
  c.raw = j;
  c.problem = j["problem"];
  build_problem(c.problem);  // validates the problem block early

  const json& h = j["hyper"];
  allow_keys(h, "config.hyper", {"eta", "k", "b"});
  if (!h.contains("eta")) fail("config.hyper.eta", "missing");
  c.hyper.eta = get_num(h["eta"], "config.hyper.eta");
  c.hyper.b = static_cast<int>(opt<long>(h, "b", "config.hyper", 1, get_int));
  c.k_given = h.contains("k");
  c.hyper.k = static_cast<int>(opt<long>(h, "k", "config.hyper", 1, get_int));
  try {
    c.hyper.check();
  } catch (const Error& e) {
    fail("config.hyper", e.what());
  }

  if (j.contains("init")) c.init = get_vec(j["init"], "config.init");
  if (j.contains("policies")) {
    if (!j["policies"].is_array() || j["policies"].empty()) fail("config.policies", "expected a non-empty array");
    c.policies.clear();
    for (size_t i = 0; i < j["policies"].size(); ++i) {
      const json& p = j["policies"][i];
      const std::string pp = "config.policies[" + std::to_string(i) + "]";
      if (!p.is_string()) fail(pp, "expected a policy name");
      try {
        c.policies.push_back(policy_from_string(p.get<std::string>()));
      } catch (const Error& e) {
        fail(pp, e.what());
      }
    }
  }
  c.epochs = static_cast<int>(opt<long>(j, "epochs", "config", 1, get_int));
  if (c.epochs < 1) fail("config.epochs", "must be >= 1");
  if (j.contains("seeds")) {
    if (!j["seeds"].is_array() || j["seeds"].empty()) fail("config.seeds", "expected a non-empty array");
    c.seeds.clear();
    for (size_t i = 0; i < j["seeds"].size(); ++i) {
      const long s = get_int(j["seeds"][i], "config.seeds[" + std::to_string(i) + "]");
      if (s < 0) fail("config.seeds[" + std::to_string(i) + "]", "must be >= 0");
      c.seeds.push_back(static_cast<uint64_t>(s));
    }
  }
  c.noise_sigma = opt<double>(j, "noise_sigma", "config", 0.0, get_num);
  if (c.noise_sigma < 0) fail("config.noise_sigma", "must be >= 0");
  if (j.contains("outputs")) {
    if (!j["outputs"].is_string()) fail("config.outputs", "expected a directory path");
    c.outputs = j["outputs"];
  }
  if (j.contains("analysis")) {
    const json& a = j["analysis"];
    const std::string ap = "config.analysis";
    allow_keys(a, ap, {"bias_report", "bias_every", "enumeration", "mc_samples", "predictors", "loss_drop",
                       "max_epochs"});
    c.analysis.bias_report = opt<bool>(a, "bias_report", ap, false, get_bool);
    c.analysis.bias_every = static_cast<int>(opt<long>(a, "bias_every", ap, 1, get_int));
    if (c.analysis.bias_every < 1) fail(ap + ".bias_every", "must be >= 1");
    if (a.contains("enumeration")) {
      if (!a["enumeration"].is_string()) fail(ap + ".enumeration", "expected a string");
      c.analysis.enumeration = a["enumeration"];
      if (c.analysis.enumeration != "exact" && c.analysis.enumeration != "monte_carlo")
        fail(ap + ".enumeration", "expected 'exact' or 'monte_carlo'");
    }
    c.analysis.mc_samples = opt<long>(a, "mc_samples", ap, 2000, get_int);
    if (c.analysis.mc_samples < 2) fail(ap + ".mc_samples", "must be >= 2");
    c.analysis.predictors = opt<bool>(a, "predictors", ap, false, get_bool);
    c.analysis.loss_drop = opt<double>(a, "loss_drop", ap, 1.0, get_num);
    if (!(c.analysis.loss_drop > 0)) fail(ap + ".loss_drop", "must be > 0");
    c.analysis.max_epochs = static_cast<int>(opt<long>(a, "max_epochs", ap, 200, get_int));
    if (c.analysis.max_epochs < 1) fail(ap + ".max_epochs", "must be >= 1");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

Hyperparams bind_hyper(const ExperimentConfig& cfg, const Problem& p) {
  Hyperparams h = cfg.hyper;
  if (!cfg.k_given) h.k = std::max(1, p.data.n() / h.b);
  return h;
}

}  // namespace sgdwr
