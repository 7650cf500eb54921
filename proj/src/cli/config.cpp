#include "qbd/cli.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace qbd::cli {

namespace {

const std::vector<std::string> kCycleKeys{"omega_c", "omega_h", "beta_c", "beta_h",
                                          "epsilon", "t_d",     "t_cycle"};
const std::vector<std::string> kCycleOptional{"stroke3_share", "dephasing_model",
                                              "dephasing_cadence"};

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

bool is_number_or_list(const nlohmann::json& v) {
  if (v.is_number()) return true;
  if (!v.is_array() || v.empty()) return false;
  return std::all_of(v.begin(), v.end(), [](const auto& x) { return x.is_number(); });
}

}  // namespace

const std::vector<ExperimentInfo>& catalog() {
  static const std::vector<ExperimentInfo> items{
      {"collective-advantage", "Fig. 2", "Gamma vs N for parallel and collective charging",
       {"N", "beta", "omega", "epsilon", "delta"}, {"method"},
       "N,beta,omega,epsilon,delta,T_parallel,T_collective,gamma"},
      {"advantage-vs-beta", "Fig. 3", "Gamma vs beta*omega for several N",
       {"N", "beta_omega", "omega", "epsilon", "delta"}, {"method"},
       "N,beta,omega,epsilon,delta,T_parallel,T_collective,gamma"},
      {"charge-single", "Fig. 4(a)", "single-battery charging trajectory and ledger",
       {"omega", "epsilon", "beta", "t_max"},
       {"samples", "protocol", "t_d", "dynamics", "delta_t", "alpha_R"},
       "t,E_frac,coherence,W,Q,eta_heat,eta_ergo"},
      {"optimize-protocol", "Fig. 4", "gradient-ascent protocol optimization",
       {"omega", "epsilon", "beta", "t_N"},
       {"n_segments", "zeta", "restarts", "max_iterations", "gradient_tol"},
       "segment,t_start,dt,alpha"},
      {"dephasing-sweep", "Fig. 5", "double-quench charging under dephasing strength p",
       {"omega", "epsilon", "beta", "t_d", "t_total", "p"}, {"cadence"},
       "p,power,eta_heat,eta_ergo,power_ratio,eta_ergo_ratio"},
      {"cycle-sweep", "Fig. 7", "engine efficiency and power over (omega_h, beta_h)", kCycleKeys,
       kCycleOptional, "omega_h,beta_h,variant,eta,power,C_max,W1,W2,W4,W5,Qh,Qc"},
      {"finite-time-cycle", "Fig. 8", "limit-cycle efficiency and power vs cycle time", kCycleKeys,
       kCycleOptional, "t_cycle,variant,eta,power,converged"},
      {"coherence-correlation", "Fig. 9", "maximum coherence vs coherent power gain", kCycleKeys,
       kCycleOptional, "omega_h,beta_h,C_max,power_coherent,power_dephased,power_gap"},
  };
  return items;
}

const ExperimentInfo* find_experiment(const std::string& name) {
  for (const auto& e : catalog()) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::string suggest_experiment(const std::string& name) {
  const ExperimentInfo* best = &catalog().front();
  std::size_t best_d = edit_distance(name, best->name);
  for (const auto& e : catalog()) {
    const std::size_t d = edit_distance(name, e.name);
    if (d < best_d) {
      best_d = d;
      best = &e;
    }
  }
  return best->name;
}

ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  if (!j.contains("experiment") || !j["experiment"].is_string()) {
    throw ConfigError("config: missing string key 'experiment'");
  }
  c.experiment = j["experiment"].get<std::string>();
  if (j.contains("parameters")) {
    if (!j["parameters"].is_object()) throw ConfigError("config: 'parameters' must be an object");
    c.parameters = j["parameters"];
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0) {
      throw ConfigError("config: 'seed' must be a non-negative integer");
    }
    c.seed = j["seed"].get<std::uint64_t>();
  }
  c.output_path = j.value("output_path", c.experiment + ".csv");
  if (c.output_path.empty()) throw ConfigError("config: 'output_path' is empty");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> validate(const ExperimentConfig& config) {
  std::vector<std::string> problems;
  const ExperimentInfo* info = find_experiment(config.experiment);
  if (info == nullptr) {
    problems.push_back("unknown experiment '" + config.experiment + "'; did you mean '" +
                       suggest_experiment(config.experiment) + "'? (see 'qbdissim list')");
    return problems;
  }
  const auto& p = config.parameters;
  for (const auto& key : info->required) {
    if (key == "epsilon" && !p.contains("epsilon") && p.contains("epsilon2")) continue;
    if (!p.contains(key)) {
      problems.push_back("missing required parameter '" + key + "'");
      continue;
    }
    if (key == "protocol") continue;
    if (!is_number_or_list(p[key])) {
      problems.push_back("parameter '" + key + "' must be a number or a non-empty list of numbers");
    }
  }
  for (const auto& [key, value] : p.items()) {
    const bool known = std::find(info->required.begin(), info->required.end(), key) != info->required.end() ||
                       std::find(info->optional.begin(), info->optional.end(), key) != info->optional.end() ||
                       (key == "epsilon2" &&
                        std::find(info->required.begin(), info->required.end(), "epsilon") != info->required.end());
    if (!known) problems.push_back("unknown parameter '" + key + "' for " + info->name);
    if (value.is_array() && value.empty()) problems.push_back("parameter '" + key + "' is an empty list");
  }
  if (p.contains("epsilon") && p.contains("epsilon2")) {
    problems.push_back("give either 'epsilon' or 'epsilon2', not both");
  }
  return problems;
}

}  // namespace qbd::cli
