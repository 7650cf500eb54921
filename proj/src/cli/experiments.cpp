#include "qbd/cli.hpp"
#include "qbd/collective.hpp"
#include "qbd/collision.hpp"
#include "qbd/control.hpp"
#include "qbd/engine.hpp"
#include "qbd/qcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#ifndef QBD_VERSION
#define QBD_VERSION "unknown"
#endif

namespace qbd::cli {

namespace {

using nlohmann::json;

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// Parameter reader that records every resolved value, defaults included.
class Params {
 public:
  explicit Params(const json& raw) : raw_(raw) {}

  double number(const std::string& key) {
    if (!raw_.contains(key)) throw ConfigError("missing required parameter '" + key + "'");
    const auto& v = raw_[key];
    if (!v.is_number()) throw ConfigError("parameter '" + key + "' must be a single number");
    resolved_[key] = v;
    return v.get<double>();
  }

  double number_or(const std::string& key, double fallback) {
    if (!raw_.contains(key)) {
      resolved_[key] = fallback;
      return fallback;
    }
    return number(key);
  }

  double positive(const std::string& key) {
    const double x = number(key);
    if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError("parameter '" + key + "' must be positive");
    return x;
  }

  double positive_or(const std::string& key, double fallback) {
    const double x = number_or(key, fallback);
    if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError("parameter '" + key + "' must be positive");
    return x;
  }

  /// Scalar or list; sorted ascending with duplicates removed.
  std::vector<double> list(const std::string& key) {
    if (!raw_.contains(key)) throw ConfigError("missing required parameter '" + key + "'");
    const auto& v = raw_[key];
    std::vector<double> out;
    if (v.is_number()) {
      out.push_back(v.get<double>());
    } else if (v.is_array()) {
      if (v.empty()) throw ConfigError("parameter '" + key + "' is an empty list");
      for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError("parameter '" + key + "' must contain numbers only");
        out.push_back(x.get<double>());
      }
    } else {
      throw ConfigError("parameter '" + key + "' must be a number or a list of numbers");
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    resolved_[key] = out;
    return out;
  }

  std::vector<double> positive_list(const std::string& key) {
    auto xs = list(key);
    for (double x : xs) {
      if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError("parameter '" + key + "' must be positive");
    }
    return xs;
  }

  std::vector<int> int_list(const std::string& key, int min_value) {
    std::vector<int> out;
    for (double x : list(key)) {
      if (x != std::floor(x) || x < min_value) {
        throw ConfigError("parameter '" + key + "' must hold integers >= " + std::to_string(min_value));
      }
      out.push_back(static_cast<int>(x));
    }
    return out;
  }

  long integer_or(const std::string& key, long fallback, long min_value) {
    const double x = number_or(key, static_cast<double>(fallback));
    if (x != std::floor(x) || x < static_cast<double>(min_value)) {
      throw ConfigError("parameter '" + key + "' must be an integer >= " + std::to_string(min_value));
    }
    return static_cast<long>(x);
  }

  std::string string_or(const std::string& key, const std::string& fallback,
                        const std::vector<std::string>& allowed) {
    std::string s = fallback;
    if (raw_.contains(key)) {
      if (!raw_[key].is_string()) throw ConfigError("parameter '" + key + "' must be a string");
      s = raw_[key].get<std::string>();
    }
    if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
      std::string msg = "parameter '" + key + "' must be one of:";
      for (const auto& a : allowed) msg += " " + a;
      throw ConfigError(msg);
    }
    resolved_[key] = s;
    return s;
  }

  /// Coupling from 'epsilon' or 'epsilon2'; both spellings are recorded.
  double epsilon() {
    double eps = 0.0;
    if (raw_.contains("epsilon2")) {
      const double e2 = positive("epsilon2");
      eps = std::sqrt(e2);
    } else {
      eps = positive("epsilon");
    }
    resolved_["epsilon"] = eps;
    resolved_["epsilon2"] = eps * eps;
    return eps;
  }

  bool has(const std::string& key) const { return raw_.contains(key); }
  const json& raw(const std::string& key) const { return raw_.at(key); }
  void record(const std::string& key, json value) { resolved_[key] = std::move(value); }
  const json& resolved() const { return resolved_; }

 private:
  const json& raw_;
  json resolved_ = json::object();
};

struct Table {
  std::string header;
  std::vector<std::string> rows;

  std::string str() const {
    std::string out = header + "\n";
    for (const auto& r : rows) out += r + "\n";
    return out;
  }
};

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ",";
    out += cells[i];
  }
  return out;
}

// ---- collective ----------------------------------------------------------------

RunOutput run_advantage(const ExperimentInfo& info, Params& p, bool beta_from_product, Exec exec) {
  const std::vector<int> Ns = p.int_list("N", 1);
  const double omega = p.positive("omega");
  const double eps = p.epsilon();
  const double delta = p.positive("delta");
  if (delta >= 1.0) throw ConfigError("parameter 'delta' must lie in (0, 1)");
  const std::string method = p.string_or("method", "sector", {"sector", "dense"});
  std::vector<double> betas;
  if (beta_from_product) {
    for (double bw : p.positive_list("beta_omega")) betas.push_back(bw / omega);
    p.record("beta", betas);
  } else {
    betas = p.positive_list("beta");
  }
  if (method == "dense" && *std::max_element(Ns.begin(), Ns.end()) > 3) {
    throw ConfigError("method 'dense' supports N <= 3");
  }

  struct Row {
    collective::BatteryEnsembleSpec spec;
    double Tp = 0.0, Tc = 0.0, gamma = 0.0;
    bool ok = false;
    std::string error;
  };
  // Rows ordered by (N, beta); beta_omega sweeps read naturally grouped by N.
  std::vector<Row> rows;
  for (int N : Ns) {
    for (double b : betas) {
      Row r;
      r.spec = {N, omega, eps, b, delta};
      rows.push_back(r);
    }
  }
  for (const auto& r : rows) {
    try {
      r.spec.validate();
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  for_each_index(
      static_cast<std::ptrdiff_t>(rows.size()),
      [&](std::ptrdiff_t i) {
        Row& r = rows[static_cast<std::size_t>(i)];
        try {
          if (method == "dense") {
            r.Tp = collective::charge_time_dense(r.spec, collective::Process::parallel);
            r.Tc = collective::charge_time_dense(r.spec, collective::Process::collective);
          } else {
            r.Tp = collective::charge_time(r.spec, collective::Process::parallel);
            r.Tc = collective::charge_time(r.spec, collective::Process::collective);
          }
          r.gamma = r.Tp / r.Tc;
          r.ok = std::isfinite(r.gamma) && r.gamma > 0.0;
        } catch (const NumericalError& e) {
          r.error = e.what();
        }
      },
      exec);

  RunOutput out;
  Table t{info.csv_header, {}};
  json flags = json::array();
  for (const auto& r : rows) {
    t.rows.push_back(join({std::to_string(r.spec.N), num(r.spec.beta), num(omega), num(eps),
                           num(delta), num(r.Tp), num(r.Tc), num(r.gamma)}));
    json f{{"N", r.spec.N}, {"beta", r.spec.beta}, {"converged", r.ok}};
    if (!r.error.empty()) f["error"] = r.error;
    flags.push_back(f);
    out.all_converged = out.all_converged && r.ok;
  }
  out.csv = t.str();
  out.sidecar["convergence"]["rows"] = flags;
  return out;
}

// ---- single battery --------------------------------------------------------------

control::Protocol protocol_prefix(const control::Protocol& full, double t) {
  control::Protocol out;
  double elapsed = 0.0;
  for (const auto& s : full.segments) {
    if (elapsed >= t) break;
    const double dt = std::min(s.dt, t - elapsed);
    if (dt > 0.0) out.segments.push_back({dt, s.alpha});
    elapsed += s.dt;
  }
  return out;
}

RunOutput run_charge_single(const ExperimentInfo& info, Params& p) {
  const double omega = p.positive("omega");
  const double eps = p.epsilon();
  const double beta = p.positive("beta");
  const double t_max = p.positive("t_max");
  const long samples = p.integer_or("samples", 200, 1);
  const std::string dynamics = p.string_or("dynamics", "collision", {"collision", "master"});

  const HermitianOperator h(qubit::sigma_z() * (omega / 2.0), "H_S");
  const DensityMatrix rho0(qubit::thermal(omega, beta));
  const double E_empty = energy(rho0, h);
  const double E_full = -E_empty;  // inverted Gibbs state
  const auto e_frac = [&](double E) { return (E - E_empty) / (E_full - E_empty); };
  const auto eff_cells = [](double W, double Q, double ergo) {
    if (!(W > 0.0)) return std::vector<std::string>{"nan", "nan"};
    return std::vector<std::string>{num(1.0 - Q / W), num(ergo / W)};
  };

  RunOutput out;
  Table t{info.csv_header, {}};
  double worst_residual = 0.0;

  if (dynamics == "collision") {
    const double dt = p.positive_or("delta_t", 1e-3);
    const double alpha_R = p.positive_or("alpha_R", 1.0);
    if (p.has("protocol") || p.has("t_d")) {
      throw ConfigError("'protocol' and 't_d' need dynamics = master");
    }
    collision::CollisionSpec spec;
    try {
      spec = collision::single_battery(omega, eps, beta, dt, alpha_R);
      spec.validate();
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
    const collision::CollisionMap map(spec);
    const long n_steps = std::max(1L, std::lround(t_max / dt));
    const long every = std::max(1L, n_steps / samples);
    collision::ThermoLedger ledger;
    Mat rho = rho0.matrix();
    const auto emit = [&](long step) {
      const DensityMatrix r(rho);
      const auto cells = eff_cells(ledger.work, ledger.heat, ergotropy(r, h));
      t.rows.push_back(join({num(static_cast<double>(step) * dt), num(e_frac(energy(r, h))),
                             num(rel_entropy_coherence(r, h)), num(ledger.work), num(ledger.heat),
                             cells[0], cells[1]}));
    };
    emit(0);
    for (long k = 1; k <= n_steps; ++k) {
      collision::StepLedger s;
      rho = map.step(rho, &s);
      ledger.add(s);
      if (k % every == 0 || k == n_steps) emit(k);
    }
    worst_residual = ledger.max_first_law_residual;
    p.record("steps", n_steps);
  } else {
    control::DriveParams params{omega, eps, beta};
    control::Protocol protocol;
    std::string kind = "constant";
    if (p.has("protocol") && p.raw("protocol").is_object()) {
      try {
        protocol = control::Protocol::from_json(p.raw("protocol").dump());
      } catch (const std::exception& e) {
        throw ConfigError(std::string("parameter 'protocol': ") + e.what());
      }
      kind = "custom";
      p.record("protocol", json::parse(protocol.to_json()));
    } else {
      kind = p.string_or("protocol", "constant", {"constant", "double-quench"});
      if (kind == "double-quench") {
        protocol = control::Protocol::double_quench(p.positive("t_d"), t_max);
      } else {
        protocol = control::Protocol::constant(0.0, t_max);
      }
    }
    const double T = protocol.total_time();
    for (long k = 0; k <= samples; ++k) {
      const double tk = T * static_cast<double>(k) / static_cast<double>(samples);
      double W = 0.0, Q = 0.0, ergo = 0.0;
      DensityMatrix r = rho0;
      if (k > 0) {
        const auto res = control::driven_run(protocol_prefix(protocol, tk), rho0, params);
        W = res.ledger.W_drive + res.ledger.W_interaction;
        Q = res.ledger.Q;
        ergo = res.ledger.ergotropy_final;
        r = DensityMatrix(res.trajectory.states.back());
        worst_residual = std::max(worst_residual, res.ledger.first_law_residual);
      }
      const auto cells = eff_cells(W, Q, ergo);
      t.rows.push_back(join({num(tk), num(e_frac(energy(r, h))), num(rel_entropy_coherence(r, h)),
                             num(W), num(Q), cells[0], cells[1]}));
    }
  }
  const double tol = 1e-9;
  out.all_converged = worst_residual <= tol;
  out.sidecar["convergence"] = {{"max_first_law_residual", worst_residual}, {"tolerance", tol}};
  out.sidecar["diagnostics"] = {{"E_empty", E_empty}, {"E_full", E_full}};
  out.csv = t.str();
  return out;
}

// ---- protocol optimization ----------------------------------------------------------

RunOutput run_optimize(const ExperimentInfo& info, Params& p, std::uint64_t seed, Exec exec) {
  control::DriveParams params{p.positive("omega"), p.epsilon(), p.positive("beta")};
  control::OptimizerSettings s;
  s.t_N = p.positive("t_N");
  s.n_segments = static_cast<int>(p.integer_or("n_segments", s.n_segments, 2));
  s.zeta = p.positive_or("zeta", s.zeta);
  s.restarts = static_cast<int>(p.integer_or("restarts", s.restarts, 1));
  s.max_iterations = p.integer_or("max_iterations", s.max_iterations, 1);
  s.gradient_tol = p.positive_or("gradient_tol", s.gradient_tol);
  s.seed = seed;
  s.exec = exec;
  const DensityMatrix rho0(qubit::thermal(params.omega, params.beta));
  const auto report = control::optimize_protocol(s, params, rho0.matrix());

  RunOutput out;
  Table t{info.csv_header, {}};
  double start = 0.0;
  for (std::size_t k = 0; k < report.best.protocol.segments.size(); ++k) {
    const auto& seg = report.best.protocol.segments[k];
    t.rows.push_back(join({std::to_string(k), num(start), num(seg.dt), num(seg.alpha)}));
    start += seg.dt;
  }
  json runs = json::array();
  for (const auto& r : report.runs) {
    runs.push_back({{"seed", r.seed},
                    {"objective", r.objective},
                    {"iterations", r.iterations},
                    {"gradient_norm", r.gradient_norm},
                    {"converged", r.converged}});
  }
  const auto fit = control::fit_step(report.best.protocol);
  const auto best_run = control::driven_run(report.best.protocol, rho0, params);
  out.all_converged = report.best.converged;
  out.sidecar["convergence"] = {{"best_converged", report.best.converged}, {"runs", runs}};
  out.sidecar["diagnostics"] = {{"objective", report.best.objective},
                                {"step_fit", {{"t_switch", fit.t_switch},
                                              {"mean_deviation", fit.mean_deviation},
                                              {"head_mean", fit.head_mean},
                                              {"tail_mean", fit.tail_mean}}},
                                {"eta_ergo", best_run.eta_ergo},
                                {"eta_heat", best_run.eta_heat},
                                {"power", best_run.power}};
  out.csv = t.str();
  out.extra_files.emplace_back("protocol.json", report.best.protocol.to_json());
  return out;
}

// ---- dephasing ------------------------------------------------------------------

RunOutput run_dephasing(const ExperimentInfo& info, Params& p, Exec exec) {
  control::DriveParams params{p.positive("omega"), p.epsilon(), p.positive("beta")};
  const double t_d = p.positive("t_d");
  const double t_total = p.positive("t_total");
  if (t_d > t_total) throw ConfigError("parameter 't_d' must not exceed 't_total'");
  const double cadence = p.number_or("cadence", 0.0);
  const auto ps = p.list("p");
  for (double x : ps) {
    if (x < 0.0 || x > 1.0) throw ConfigError("parameter 'p' must lie in [0, 1]");
  }
  const DensityMatrix rho0(qubit::thermal(params.omega, params.beta));
  const auto protocol = control::Protocol::double_quench(t_d, t_total);
  // Ratios are taken against the undriven (constant sigma_z) process.
  const auto base = control::driven_run(control::Protocol::constant(0.0, t_total), rho0, params);

  std::vector<control::DrivenResult> results(ps.size());
  for_each_index(
      static_cast<std::ptrdiff_t>(ps.size()),
      [&](std::ptrdiff_t i) {
        const auto k = static_cast<std::size_t>(i);
        control::Dephasing d{ps[k] > 0.0 ? control::DephasingMode::cadence : control::DephasingMode::none,
                             ps[k], cadence};
        results[k] = control::driven_run(protocol, rho0, params, d);
      },
      exec);

  RunOutput out;
  Table t{info.csv_header, {}};
  double worst = base.ledger.first_law_residual;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    const auto& r = results[k];
    worst = std::max(worst, r.ledger.first_law_residual);
    t.rows.push_back(join({num(ps[k]), num(r.power), num(r.eta_heat), num(r.eta_ergo),
                           num(r.power / base.power), num(r.eta_ergo / base.eta_ergo)}));
  }
  const double tol = 1e-9;
  out.all_converged = worst <= tol;
  out.sidecar["convergence"] = {{"max_first_law_residual", worst}, {"tolerance", tol}};
  out.sidecar["diagnostics"] = {{"constant_power", base.power}, {"constant_eta_ergo", base.eta_ergo}};
  out.csv = t.str();
  return out;
}

// ---- engine ---------------------------------------------------------------------

engine::CycleSpec cycle_base(Params& p, bool sweep_omega_beta, bool sweep_time) {
  engine::CycleSpec s;
  s.omega_c = p.positive("omega_c");
  s.beta_c = p.positive("beta_c");
  s.epsilon = p.epsilon();
  s.t_d = p.positive("t_d");
  if (!sweep_omega_beta) {
    s.omega_h = p.positive("omega_h");
    s.beta_h = p.positive("beta_h");
  }
  if (!sweep_time) s.t_cycle = p.positive("t_cycle");
  s.stroke3_share = p.number_or("stroke3_share", s.stroke3_share);
  const std::string model = p.string_or("dephasing_model", "zeno", {"zeno", "cadence"});
  s.dephasing_model = model == "zeno" ? engine::DephasingModel::zeno : engine::DephasingModel::cadence;
  s.dephasing_cadence = p.number_or("dephasing_cadence", 0.0);
  return s;
}

void check_cycle(const engine::CycleSpec& s) {
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

constexpr double kAuditTol = 1e-8;

json cycle_flags(const engine::CycleResult& r) {
  return {{"omega_h", r.spec.omega_h},
          {"beta_h", r.spec.beta_h},
          {"t_cycle", r.spec.t_cycle},
          {"variant", engine::variant_name(r.spec.variant)},
          {"converged", r.ledger.converged},
          {"cycles", r.ledger.cycles},
          {"closing_distance", r.ledger.closing_distance},
          {"energy_audit", r.ledger.energy_audit}};
}

bool cycle_ok(const engine::CycleResult& r) {
  return r.ledger.converged && std::abs(r.ledger.energy_audit) <= kAuditTol;
}

RunOutput run_cycle_sweep(const ExperimentInfo& info, Params& p, Exec exec) {
  const auto base = cycle_base(p, true, false);
  const auto omegas = p.positive_list("omega_h");
  const auto betas = p.positive_list("beta_h");
  std::vector<engine::CycleSpec> specs;
  for (double w : omegas) {
    for (double b : betas) {
      for (auto v : {engine::Variant::coherent, engine::Variant::dephased}) {
        auto s = base;
        s.omega_h = w;
        s.beta_h = b;
        s.variant = v;
        check_cycle(s);
        specs.push_back(s);
      }
    }
  }
  const auto results = engine::run_cycles(specs, exec);
  RunOutput out;
  Table t{info.csv_header, {}};
  json flags = json::array();
  for (const auto& r : results) {
    const auto& L = r.ledger;
    t.rows.push_back(join({num(r.spec.omega_h), num(r.spec.beta_h), engine::variant_name(r.spec.variant),
                           num(L.eta), num(L.power), num(L.coherence_max), num(L.W1), num(L.W2),
                           num(L.W4), num(L.W5), num(L.Qh), num(L.Qc)}));
    flags.push_back(cycle_flags(r));
    out.all_converged = out.all_converged && cycle_ok(r);
  }
  out.sidecar["convergence"] = {{"rows", flags}, {"energy_audit_tolerance", kAuditTol}};
  out.sidecar["diagnostics"] = {{"otto_efficiency_by_omega_h", [&] {
                                   json o = json::object();
                                   for (double w : omegas) o[num(w)] = engine::otto_efficiency(base.omega_c, w);
                                   return o;
                                 }()}};
  out.csv = t.str();
  return out;
}

RunOutput run_finite_time(const ExperimentInfo& info, Params& p, Exec exec) {
  const auto base = cycle_base(p, false, true);
  const auto ts = p.positive_list("t_cycle");
  for (double tc : ts) {
    auto s = base;
    s.t_cycle = tc;
    check_cycle(s);
  }
  const auto rows = engine::finite_time_sweep(base, ts, exec);
  RunOutput out;
  Table t{info.csv_header, {}};
  json flags = json::array();
  for (const auto& r : rows) {
    t.rows.push_back(join({num(r.t_cycle), engine::variant_name(r.variant), num(r.eta), num(r.power),
                           r.converged ? "true" : "false"}));
    flags.push_back({{"t_cycle", r.t_cycle},
                     {"variant", engine::variant_name(r.variant)},
                     {"converged", r.converged},
                     {"cycles", r.cycles}});
    out.all_converged = out.all_converged && r.converged;
  }
  out.sidecar["convergence"] = {{"rows", flags}};
  out.sidecar["diagnostics"] = {{"coherent_only_window", engine::coherent_only_window(rows)},
                                {"otto_efficiency", engine::otto_efficiency(base.omega_c, base.omega_h)}};
  out.csv = t.str();
  return out;
}

RunOutput run_correlation(const ExperimentInfo& info, Params& p, Exec exec) {
  const auto base = cycle_base(p, true, false);
  const auto omegas = p.positive_list("omega_h");
  const auto betas = p.positive_list("beta_h");
  for (double w : omegas) {
    for (double b : betas) {
      auto s = base;
      s.omega_h = w;
      s.beta_h = b;
      check_cycle(s);
    }
  }
  const auto report = engine::coherence_power_correlation(base, omegas, betas, exec);
  RunOutput out;
  Table t{info.csv_header, {}};
  for (const auto& r : report.rows) {
    t.rows.push_back(join({num(r.omega_h), num(r.beta_h), num(r.C_max), num(r.power_coherent),
                           num(r.power_dephased), num(r.power_gap)}));
  }
  out.all_converged = std::isfinite(report.spearman);
  out.sidecar["convergence"] = {{"spearman_finite", out.all_converged}};
  out.sidecar["diagnostics"] = {{"spearman", report.spearman}};
  out.csv = t.str();
  return out;
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& config, Exec exec) {
  const auto problems = validate(config);
  if (!problems.empty()) throw ConfigError(problems.front());
  const ExperimentInfo& info = *find_experiment(config.experiment);
  Params p(config.parameters);

  RunOutput out;
  const std::string& e = info.name;
  if (e == "collective-advantage") {
    out = run_advantage(info, p, false, exec);
  } else if (e == "advantage-vs-beta") {
    out = run_advantage(info, p, true, exec);
  } else if (e == "charge-single") {
    out = run_charge_single(info, p);
  } else if (e == "optimize-protocol") {
    out = run_optimize(info, p, config.seed, exec);
  } else if (e == "dephasing-sweep") {
    out = run_dephasing(info, p, exec);
  } else if (e == "cycle-sweep") {
    out = run_cycle_sweep(info, p, exec);
  } else if (e == "finite-time-cycle") {
    out = run_finite_time(info, p, exec);
  } else {
    out = run_correlation(info, p, exec);
  }

  out.sidecar["experiment"] = e;
  out.sidecar["figure"] = info.figure;
  out.sidecar["version"] = QBD_VERSION;
  out.sidecar["seed"] = config.seed;
  out.sidecar["parameters"] = p.resolved();
  out.sidecar["csv"] = config.output_path;
  out.sidecar["csv_header"] = info.csv_header;
  out.sidecar["convergence"]["all_converged"] = out.all_converged;
  return out;
}

}  // namespace qbd::cli
