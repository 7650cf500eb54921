#include "qbd/engine.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace qbd::engine {

using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;

namespace {

Vec4 vec4(const Mat& rho) {
  Vec4 v;
  v << rho(0, 0), rho(0, 1), rho(1, 0), rho(1, 1);
  return v;
}

Mat unvec4(const Vec4& v) {
  Mat rho(2, 2);
  rho << v(0), v(1), v(2), v(3);
  return rho;
}

Mat4 projector_super(const Mat& h) {
  Mat4 s = Mat4::Zero();
  for (const Mat& p : energy_projectors(h)) s += Mat4(sandwich(p, p));
  return s;
}

control::DriveParams cold_params(const CycleSpec& s) { return {s.omega_c, s.epsilon, s.beta_c}; }
control::DriveParams hot_params(const CycleSpec& s) { return {s.omega_h, s.epsilon, s.beta_h}; }

control::Dephasing stroke3_dephasing(const CycleSpec& s) {
  if (s.variant == Variant::coherent) return {};
  return {s.dephasing_model == DephasingModel::zeno ? control::DephasingMode::zeno
                                                    : control::DephasingMode::cadence,
          s.dephasing_p, s.dephasing_cadence};
}

/// One-period map on vec(rho1). Mirrors control::driven_run for stroke 3.
Mat4 period_map(const CycleSpec& s) {
  const auto pc = cold_params(s);
  const double t3 = s.stroke3_time();
  const double td = s.effective_t_d();
  const Mat4 lx = control::generator_matrix(1.0, pc);
  const Mat4 lz = control::generator_matrix(0.0, pc);
  const Mat4 lh = control::generator_matrix(0.0, hot_params(s));

  Mat4 flip = Mat4::Zero();  // sigma_x rho sigma_x
  flip(0, 3) = flip(3, 0) = flip(1, 2) = flip(2, 1) = 1.0;

  Mat4 m3 = Mat4::Identity();
  const control::Dephasing deph = stroke3_dephasing(s);
  const double cadence = deph.cadence > 0.0
                             ? deph.cadence
                             : 1e-2 * std::min(1.0 / s.omega_c, 1.0 / (s.epsilon * s.epsilon));
  auto segment = [&](const Mat4& l, const Mat& h, double dt) -> Mat4 {
    if (dt <= 0.0) return Mat4::Identity();
    if (deph.mode == control::DephasingMode::zeno && deph.p > 0.0) {
      const Mat4 p = projector_super(h);
      return (p * l * p * dt).exp() * p;
    }
    if (deph.mode == control::DephasingMode::cadence && deph.p > 0.0) {
      const int n = static_cast<int>(std::ceil(dt / cadence - 1e-9));
      const Mat4 d = (1.0 - 0.5 * deph.p) * Mat4::Identity() + 0.5 * deph.p * projector_super(h);
      const Mat4 step = d * (l * (dt / n)).exp();
      Mat4 out = Mat4::Identity();
      for (int i = 0; i < n; ++i) out = step * out;
      return out;
    }
    return (l * dt).exp();
  };
  m3 = segment(lz, control::h_alpha_unchecked(0.0, s.omega_c), t3 - td) *
       segment(lx, control::h_alpha_unchecked(1.0, s.omega_c), td);
  return (lh * s.stroke5_time()).exp() * m3 * flip;
}

// Coherence in the eigenbasis of the Hamiltonian active on the interval ending at each sample.
double max_coherence(const control::Trajectory& tr, double omega) {
  double c = 0.0;
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    c = std::max(c, rel_entropy_coherence(tr.states[i],
                                          control::h_alpha_unchecked(tr.alphas[i], omega)));
  }
  return c;
}

}  // namespace

const char* variant_name(Variant v) { return v == Variant::coherent ? "coherent" : "dephased"; }

void CycleSpec::validate() const {
  if (!(omega_c > 0.0) || !(omega_h >= omega_c)) {
    throw DomainError("CycleSpec: need omega_h >= omega_c > 0");
  }
  if (!(beta_h > 0.0) || !(beta_c >= beta_h)) throw DomainError("CycleSpec: need beta_c >= beta_h > 0");
  if (!(t_cycle > 0.0)) throw DomainError("CycleSpec: t_cycle must be positive");
  if (!(t_d >= 0.0)) throw DomainError("CycleSpec: t_d must be non-negative");
  if (!(epsilon > 0.0)) throw DomainError("CycleSpec: epsilon must be positive");
  if (!(stroke3_share > 0.0 && stroke3_share < 1.0)) {
    throw DomainError("CycleSpec: stroke3_share must be in (0,1)");
  }
  if (!(dephasing_p >= 0.0 && dephasing_p <= 1.0)) throw DomainError("CycleSpec: dephasing_p in [0,1]");
}

double CycleSpec::effective_t_d() const { return std::min(t_d, stroke3_time()); }

CycleResult run_cycle(const CycleSpec& spec, const CycleOptions& options) {
  spec.validate();
  const Mat hh = 0.5 * spec.omega_h * qubit::sigma_z();
  const Mat hc = 0.5 * spec.omega_c * qubit::sigma_z();

  // Limit cycle.
  const Mat4 phi = period_map(spec);
  Vec4 v = vec4(qubit::thermal(spec.omega_h, -spec.beta_h));
  CycleResult res;
  res.spec = spec;
  CycleLedger& led = res.ledger;
  for (long c = 1; c <= options.max_cycles; ++c) {
    const Vec4 next = phi * v;
    const double dist = trace_distance(unvec4(next), unvec4(v));
    v = next;
    led.cycles = c;
    if (dist <= options.tolerance) {
      led.converged = true;
      break;
    }
  }

  // Ledger pass over one period from the converged start.
  const Mat rho1 = unvec4(v);
  const Mat rho2 = qubit::sigma_x() * rho1 * qubit::sigma_x();
  led.W1 = expectation(rho2 - rho1, hh);
  led.W2 = expectation(rho2, hc - hh);

  const auto proto = control::Protocol::double_quench(spec.effective_t_d(), spec.stroke3_time());
  const auto s3 = control::driven_run(proto, DensityMatrix(rho2), cold_params(spec),
                                      stroke3_dephasing(spec), options.coherence_samples);
  const Mat rho4 = s3.trajectory.states.back();
  led.W3_quench = s3.ledger.W_drive;
  led.W3_interaction = s3.ledger.W_interaction;
  led.W3 = led.W3_quench + led.W3_interaction;
  led.Qc = s3.ledger.Q;
  led.W4 = expectation(rho4, hh - hc);

  const Mat4 lh = control::generator_matrix(0.0, hot_params(spec));
  const Vec4 v4 = vec4(rho4);
  const Mat rho5 = rho4;  // quench leaves the state unchanged
  const Mat rho1_next = unvec4((lh * spec.stroke5_time()).exp() * v4);
  led.Qh = expectation(rho5 - rho1_next, hh);
  led.W5 = -2.0 * led.Qh;

  const double sum_w = led.W1 + led.W2 + led.W3 + led.W4 + led.W5;
  led.W_net = -sum_w;
  led.eta = led.Qh != 0.0 ? led.W_net / std::abs(led.Qh) : 0.0;
  led.power = led.W_net / spec.t_cycle;
  led.energy_audit = sum_w + led.Qh - led.Qc - expectation(rho1_next - rho1, hh);
  led.closing_distance = trace_distance(rho1_next, rho1);

  double cmax = std::max(rel_entropy_coherence(rho1, hh), max_coherence(s3.trajectory, spec.omega_c));
  const int n5 = std::max(1, options.coherence_samples);
  const Mat4 step5 = (lh * (spec.stroke5_time() / n5)).exp();
  Vec4 w = v4;
  for (int i = 0; i < n5; ++i) {
    w = step5 * w;
    cmax = std::max(cmax, rel_entropy_coherence(unvec4(w), hh));
  }
  led.coherence_max = cmax;
  res.states = {rho1, rho2, rho4, rho1_next};
  return res;
}

std::vector<CycleResult> run_cycles(const std::vector<CycleSpec>& specs, Exec exec,
                                    const CycleOptions& options) {
  std::vector<CycleResult> out(specs.size());
  for_each_index(
      static_cast<std::ptrdiff_t>(specs.size()),
      [&](std::ptrdiff_t i) { out[i] = run_cycle(specs[i], options); }, exec);
  return out;
}

double otto_efficiency(double omega_c, double omega_h) {
  if (!(omega_c > 0.0 && omega_h > 0.0)) throw DomainError("otto_efficiency: gaps must be positive");
  return 1.0 - omega_c / omega_h;
}

double analytic_Qh(const CycleSpec& s) {
  return 0.5 * s.omega_h * (std::tanh(0.5 * s.beta_c * s.omega_c) - std::tanh(0.5 * s.beta_h * s.omega_h));
}

namespace {

/// Parameters of x(t) = x_inf + e^{-a t}(u0 cos(W t) + S sin(W t)).
struct XSolution {
  double g1, g2, p, x0, x_inf, a, w, u0, s;
};

XSolution x_solution(const CycleSpec& spec) {
  spec.validate();
  XSolution r{};
  const double w = spec.omega_c;
  const double e2 = spec.epsilon * spec.epsilon;
  r.g1 = e2;
  r.g2 = 0.5 * e2;
  r.p = 1.0 / (1.0 + std::exp(-spec.beta_c * spec.omega_c));
  r.x0 = 1.0 / (1.0 + std::exp(spec.beta_h * spec.omega_h));
  r.x_inf = (r.g1 * r.g2 * r.p + 0.5 * w * w) / (r.g1 * r.g2 + w * w);
  r.a = 0.5 * (r.g1 + r.g2);
  const double half_diff = 0.5 * (r.g1 - r.g2);
  const double w2 = w * w - half_diff * half_diff;
  if (!(w2 > 0.0)) throw DomainError("analytic_rho00_x: overdamped regime is unsupported");
  r.w = std::sqrt(w2);
  r.u0 = r.x0 - r.x_inf;
  const double v_inf = (w / r.g2) * (r.x_inf - 0.5);
  r.s = (-half_diff * r.u0 + w * v_inf) / r.w;
  return r;
}

}  // namespace

double analytic_rho00_x(double t, const CycleSpec& spec) {
  const XSolution r = x_solution(spec);
  return r.x_inf + std::exp(-r.a * t) * (r.u0 * std::cos(r.w * t) + r.s * std::sin(r.w * t));
}

double analytic_rho00_x_secular(double t, const CycleSpec& spec) {
  spec.validate();
  const double w = spec.omega_c;
  const double e4 = std::pow(spec.epsilon, 4);
  const double w2 = w * w - e4 / 64.0;
  if (!(w2 > 0.0)) throw DomainError("analytic_rho00_x_secular: overdamped regime is unsupported");
  const double p = 1.0 / (1.0 + std::exp(-spec.beta_c * spec.omega_c));
  const double x0 = 1.0 / (1.0 + std::exp(spec.beta_h * spec.omega_h));
  const double offset = (4.0 * w * w + e4 * p) / (8.0 * w * w + e4);
  return (x0 - offset) * std::exp(-0.375 * spec.epsilon * spec.epsilon * t) * std::cos(std::sqrt(w2) * t) +
         offset;
}

double analytic_Qc_full(const CycleSpec& spec) {
  const XSolution r = x_solution(spec);
  const double td = spec.t_d;
  const double den = r.a * r.a + r.w * r.w;
  const double e = std::exp(-r.a * td);
  const double c = std::cos(r.w * td), s = std::sin(r.w * td);
  const double int_cos = (e * (r.w * s - r.a * c) + r.a) / den;
  const double int_sin = (e * (-r.a * s - r.w * c) + r.w) / den;
  const double int_x = r.x_inf * td + r.u0 * int_cos + r.s * int_sin;
  const double x_td = analytic_rho00_x(td, spec);
  return spec.omega_c * ((r.p - x_td) + r.g1 * (r.p * td - int_x));
}

double analytic_Qc_weak(const CycleSpec& spec) {
  spec.validate();
  const double ratio = spec.epsilon * spec.epsilon / spec.omega_c;
  if (ratio > 0.3) throw DomainError("analytic_Qc_weak: requires eps^2 / omega_c <= 0.3");
  const double p = 1.0 / (1.0 + std::exp(-spec.beta_c * spec.omega_c));
  const double x0 = 1.0 / (1.0 + std::exp(spec.beta_h * spec.omega_h));
  const double e2 = spec.epsilon * spec.epsilon;
  return spec.omega_c * (x0 - (1.0 - p)) + e2 * std::numbers::pi * (p - 0.75 * x0 - 0.125);
}

double efficiency_weak(const CycleSpec& spec) { return 1.0 - analytic_Qc_weak(spec) / analytic_Qh(spec); }

bool weak_regime_warning(const CycleSpec& spec) {
  return spec.epsilon * spec.epsilon / spec.omega_c > 0.1;
}

std::vector<FiniteTimeRow> finite_time_sweep(const CycleSpec& base,
                                             const std::vector<double>& t_cycles, Exec exec,
                                             const CycleOptions& options) {
  std::vector<double> ts = t_cycles;
  std::sort(ts.begin(), ts.end());
  std::vector<CycleSpec> specs;
  for (double t : ts) {
    for (Variant v : {Variant::coherent, Variant::dephased}) {
      CycleSpec s = base;
      s.t_cycle = t;
      s.variant = v;
      specs.push_back(s);
    }
  }
  const auto results = run_cycles(specs, exec, options);
  std::vector<FiniteTimeRow> rows;
  for (const auto& r : results) {
    rows.push_back({r.spec.t_cycle, r.spec.variant, r.ledger.eta, r.ledger.power, r.ledger.W_net,
                    r.ledger.converged, r.ledger.cycles});
  }
  return rows;
}

std::vector<double> coherent_only_window(const std::vector<FiniteTimeRow>& rows) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < rows.size(); i += 2) {
    const auto& c = rows[i].variant == Variant::coherent ? rows[i] : rows[i + 1];
    const auto& d = rows[i].variant == Variant::coherent ? rows[i + 1] : rows[i];
    if (c.W_net > 0.0 && d.W_net <= 0.0) out.push_back(c.t_cycle);
  }
  return out;
}

CorrelationReport coherence_power_correlation(const CycleSpec& base,
                                              const std::vector<double>& omega_h,
                                              const std::vector<double>& beta_h, Exec exec,
                                              const CycleOptions& options) {
  std::vector<double> ws = omega_h, bs = beta_h;
  std::sort(ws.begin(), ws.end());
  std::sort(bs.begin(), bs.end());
  std::vector<CycleSpec> specs;
  for (double w : ws) {
    for (double b : bs) {
      for (Variant v : {Variant::coherent, Variant::dephased}) {
        CycleSpec s = base;
        s.omega_h = w;
        s.beta_h = b;
        s.variant = v;
        specs.push_back(s);
      }
    }
  }
  const auto results = run_cycles(specs, exec, options);
  CorrelationReport rep;
  std::vector<double> cx, gap;
  for (std::size_t i = 0; i < results.size(); i += 2) {
    const auto& c = results[i];
    const auto& d = results[i + 1];
    CorrelationRow row{c.spec.omega_h, c.spec.beta_h, c.ledger.coherence_max, d.ledger.coherence_max,
                       c.ledger.power, d.ledger.power, c.ledger.power - d.ledger.power};
    rep.rows.push_back(row);
    cx.push_back(row.C_max);
    gap.push_back(row.power_gap);
  }
  rep.spearman = spearman(cx, gap);
  return rep;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("spearman: need two equal-length samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

}  // namespace qbd::engine
