#include "qbd/control.hpp"

#include <json.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <random>

namespace qbd::control {

using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;
using Row4 = Eigen::RowVector4cd;

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

Mat4 sandwich4(const Mat& a, const Mat& b) { return Mat4(sandwich(a, b)); }

/// Sum_i P_i (.) P_i over the eigenprojectors of h.
Mat4 full_dephasing_super(const Mat& h) {
  Mat4 s = Mat4::Zero();
  for (const Mat& p : energy_projectors(h)) s += sandwich4(p, p);
  return s;
}

/// exp of [[m, I], [0, 0]] * t: the propagator and its time integral.
struct Flow {
  Mat4 step;
  Mat4 integral;
};

Flow flow(const Mat4& m, double t) {
  Eigen::Matrix<cplx, 8, 8> aug = Eigen::Matrix<cplx, 8, 8>::Zero();
  aug.topLeftCorner<4, 4>() = m * t;
  aug.topRightCorner<4, 4>() = Mat4::Identity() * t;
  const Eigen::Matrix<cplx, 8, 8> e = aug.exp();
  return {e.topLeftCorner<4, 4>(), e.topRightCorner<4, 4>()};
}

void check_state(const Mat& rho, const char* where) {
  const std::string why = density_violation(rho);
  if (!why.empty()) throw NumericalError(std::string(where) + ": " + why);
}

}  // namespace

double DriveParams::gamma_up() const {
  const double x = 0.5 * beta * omega;
  return epsilon * epsilon / (1.0 + std::exp(-2.0 * x));
}

double DriveParams::gamma_down() const {
  const double x = 0.5 * beta * omega;
  return epsilon * epsilon / (1.0 + std::exp(2.0 * x));
}

double Protocol::total_time() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.dt;
  return t;
}

void Protocol::validate() const {
  for (const auto& s : segments) {
    if (!(s.dt >= 0.0) || !std::isfinite(s.dt)) throw DomainError("Protocol: durations must be >= 0");
    if (!(s.alpha >= 0.0 && s.alpha <= 1.0)) throw DomainError("Protocol: alpha outside [0,1]");
  }
}

Protocol Protocol::constant(double alpha, double total_time, int n_segments) {
  if (n_segments < 1) throw DomainError("Protocol::constant: n_segments must be >= 1");
  Protocol p;
  p.segments.assign(n_segments, Segment{total_time / n_segments, alpha});
  p.validate();
  return p;
}

Protocol Protocol::double_quench(double t_d, double total_time) {
  Protocol p;
  const double on = std::min(t_d, total_time);
  if (on > 0.0) p.segments.push_back({on, 1.0});
  if (total_time > on) p.segments.push_back({total_time - on, 0.0});
  p.validate();
  return p;
}

Protocol Protocol::from_alphas(const std::vector<double>& alphas, double dt) {
  Protocol p;
  for (double a : alphas) p.segments.push_back({dt, a});
  p.validate();
  return p;
}

std::string Protocol::to_json() const {
  nlohmann::json j;
  j["segments"] = nlohmann::json::array();
  for (const auto& s : segments) j["segments"].push_back({{"dt", s.dt}, {"alpha", s.alpha}});
  return j.dump(2);
}

Protocol Protocol::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("Protocol::from_json: ") + e.what());
  }
  if (!j.contains("segments") || !j["segments"].is_array()) {
    throw DomainError("Protocol::from_json: missing 'segments' array");
  }
  Protocol p;
  for (const auto& s : j["segments"]) {
    if (!s.contains("dt") || !s.contains("alpha")) {
      throw DomainError("Protocol::from_json: segment needs 'dt' and 'alpha'");
    }
    p.segments.push_back({s["dt"].get<double>(), s["alpha"].get<double>()});
  }
  p.validate();
  return p;
}

Mat h_alpha_unchecked(double alpha, double omega) {
  return 0.5 * omega * (alpha * qubit::sigma_x() + (1.0 - alpha) * qubit::sigma_z());
}

HermitianOperator h_alpha(double alpha, double omega) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("h_alpha: alpha outside [0,1]");
  return HermitianOperator(h_alpha_unchecked(alpha, omega), "H_alpha");
}

Eigen::Matrix4cd dissipator_matrix(const DriveParams& params) {
  const double gp = params.gamma_up();
  const double gm = params.gamma_down();
  const double c = 0.5 * (gp + gm);
  Mat4 d = Mat4::Zero();
  d(0, 0) = -gm;
  d(0, 3) = gp;
  d(3, 0) = gm;
  d(3, 3) = -gp;
  d(1, 1) = -c;
  d(2, 2) = -c;
  return d;
}

Eigen::Matrix4cd generator_matrix(double alpha, const DriveParams& params) {
  const double w = params.omega;
  const cplx r = kI * w * alpha / 2.0;  // i w alpha / 2
  const cplx z = kI * w * (1.0 - alpha);
  Mat4 m = dissipator_matrix(params);
  m(0, 1) += r;
  m(0, 2) -= r;
  m(1, 0) += r;
  m(1, 1) -= z;
  m(1, 3) -= r;
  m(2, 0) -= r;
  m(2, 2) += z;
  m(2, 3) += r;
  m(3, 1) -= r;
  m(3, 2) += r;
  return m;
}

Superoperator generator(double alpha, const DriveParams& params) {
  return Superoperator(Mat(generator_matrix(alpha, params)));
}

Eigen::RowVector4cd heat_rate_row(const DriveParams& params) {
  Row4 q = Row4::Zero();
  q(0) = -params.omega * params.gamma_down();
  q(3) = params.omega * params.gamma_up();
  return q;
}

Eigen::RowVector4cd energy_row(const Mat& h) {
  Row4 e;
  e << h(0, 0), h(1, 0), h(0, 1), h(1, 1);
  return e;
}

Mat dephase_matrix(const Mat& rho, double p, const Mat& h) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("dephase: p outside [0,1]");
  return (1.0 - 0.5 * p) * rho + 0.5 * p * dephase_full(rho, h);
}

DensityMatrix dephase(const DensityMatrix& rho, double p, const HermitianOperator& h) {
  if (rho.dim() != h.dim()) throw DomainError("dephase: dimension mismatch");
  return DensityMatrix(dephase_matrix(rho.matrix(), p, h.matrix()), rho.basis_dims());
}

DrivenResult driven_run(const Protocol& protocol, const DensityMatrix& rho0,
                        const DriveParams& params, const Dephasing& dephasing,
                        int samples_per_segment) {
  protocol.validate();
  if (rho0.dim() != 2) throw DomainError("driven_run: qubit state required");
  if (samples_per_segment < 1) throw DomainError("driven_run: samples_per_segment must be >= 1");
  if (dephasing.mode != DephasingMode::none && !(dephasing.p >= 0.0 && dephasing.p <= 1.0)) {
    throw DomainError("driven_run: dephasing p outside [0,1]");
  }
  const double cadence =
      dephasing.cadence > 0.0
          ? dephasing.cadence
          : 1e-2 * std::min(1.0 / params.omega, 1.0 / (params.epsilon * params.epsilon));

  const Mat h0 = h_alpha_unchecked(0.0, params.omega);
  const Mat4 diss = dissipator_matrix(params);
  const Row4 q_row = heat_rate_row(params);

  DrivenResult out;
  DrivenLedger& led = out.ledger;
  Vec4 v = vec4(rho0.matrix());
  const Vec4 v0 = v;
  Mat h_prev = h0;
  double t = 0.0;
  out.trajectory.times.push_back(0.0);
  out.trajectory.states.push_back(rho0.matrix());
  out.trajectory.alphas.push_back(0.0);  // bare Hamiltonian before the first quench

  for (const Segment& seg : protocol.segments) {
    const Mat h = h_alpha_unchecked(seg.alpha, params.omega);
    led.W_drive += (energy_row(h - h_prev) * v)(0).real();
    h_prev = h;
    if (seg.dt <= 0.0) continue;

    Mat4 m = generator_matrix(seg.alpha, params);
    Mat4 dephase_super = Mat4::Identity();
    int n_sub = samples_per_segment;
    if (dephasing.mode == DephasingMode::zeno && dephasing.p > 0.0) {
      const Mat4 proj = full_dephasing_super(h);
      v = proj * v;
      m = proj * m * proj;
    } else if (dephasing.mode == DephasingMode::cadence && dephasing.p > 0.0) {
      dephase_super = (1.0 - 0.5 * dephasing.p) * Mat4::Identity() +
                      0.5 * dephasing.p * full_dephasing_super(h);
      n_sub = std::max(n_sub, static_cast<int>(std::ceil(seg.dt / cadence - 1e-9)));
    }
    const double sub = seg.dt / n_sub;
    const Flow f = flow(m, sub);
    const Row4 w_row = energy_row(h) * diss + q_row;
    for (int s = 0; s < n_sub; ++s) {
      const Vec4 acc = f.integral * v;
      led.Q += (q_row * acc)(0).real();
      led.W_interaction += (w_row * acc)(0).real();
      v = dephase_super * (f.step * v);
      t += sub;
      const Mat rho = unvec4(v);
      check_state(rho, "driven_run");
      out.trajectory.times.push_back(t);
      out.trajectory.states.push_back(rho);
      out.trajectory.alphas.push_back(seg.alpha);
    }
  }
  led.W_drive += (energy_row(h0 - h_prev) * v)(0).real();
  led.dE = (energy_row(h0) * (v - v0))(0).real();

  const DensityMatrix rho_f(unvec4(v));
  led.ergotropy_final = ergotropy(rho_f.matrix(), h0);
  led.first_law_residual = std::abs(led.W_drive + led.W_interaction - led.dE - led.Q);
  const double work = led.W_drive + led.W_interaction;
  out.eta_heat = work != 0.0 ? 1.0 - led.Q / work : 0.0;
  out.eta_ergo = work != 0.0 ? led.ergotropy_final / work : 0.0;
  const double total = protocol.total_time();
  out.power = total > 0.0 ? led.dE / total : 0.0;
  return out;
}

Trajectory propagate_protocol(const Protocol& protocol, const DensityMatrix& rho0,
                              const DriveParams& params, int samples_per_segment) {
  return driven_run(protocol, rho0, params, {}, samples_per_segment).trajectory;
}

// ---- optimization ------------------------------------------------------

namespace {

Mat4 segment_propagator(double alpha, double dt, const DriveParams& params) {
  return (generator_matrix(alpha, params) * dt).exp();
}

}  // namespace

double objective(const std::vector<double>& alphas, double dt, const DriveParams& params,
                 const Mat& rho0) {
  Vec4 v = vec4(rho0);
  for (double a : alphas) v = segment_propagator(a, dt, params) * v;
  return v(0).real();
}

std::vector<double> objective_gradient(const std::vector<double>& alphas, double dt,
                                       const DriveParams& params, const Mat& rho0, double h,
                                       Exec exec) {
  const std::size_t n = alphas.size();
  std::vector<Mat4> props(n);
  for (std::size_t k = 0; k < n; ++k) props[k] = segment_propagator(alphas[k], dt, params);
  std::vector<Vec4> fwd(n + 1);
  fwd[0] = vec4(rho0);
  for (std::size_t k = 0; k < n; ++k) fwd[k + 1] = props[k] * fwd[k];
  std::vector<Row4> bwd(n + 1);
  bwd[n] = Row4::Zero();
  bwd[n](0) = 1.0;
  for (std::size_t k = n; k-- > 0;) bwd[k] = bwd[k + 1] * props[k];

  std::vector<double> g(n, 0.0);
  for_each_index(
      static_cast<std::ptrdiff_t>(n),
      [&](std::ptrdiff_t k) {
        const Mat4 up = segment_propagator(alphas[k] + h, dt, params);
        const Mat4 dn = segment_propagator(alphas[k] - h, dt, params);
        g[k] = (bwd[k + 1] * ((up - dn) * fwd[k]))(0).real() / (2.0 * h);
      },
      exec);
  return g;
}

std::vector<double> objective_gradient_naive(const std::vector<double>& alphas, double dt,
                                             const DriveParams& params, const Mat& rho0,
                                             double h) {
  std::vector<double> g(alphas.size());
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    std::vector<double> up = alphas, dn = alphas;
    up[k] += h;
    dn[k] -= h;
    g[k] = (objective(up, dt, params, rho0) - objective(dn, dt, params, rho0)) / (2.0 * h);
  }
  return g;
}

double projected_gradient_norm(const std::vector<double>& alphas, const std::vector<double>& g) {
  double m = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const bool blocked = (alphas[k] >= 1.0 && g[k] > 0.0) || (alphas[k] <= 0.0 && g[k] < 0.0);
    if (!blocked) m = std::max(m, std::abs(g[k]));
  }
  return m;
}

namespace {

OptimizationRun optimize_impl(const OptimizerSettings& settings, const DriveParams& params,
                              const Mat& rho0, std::uint64_t seed, Exec gradient_exec) {
  if (settings.n_segments < 2) throw DomainError("optimize_protocol: n_segments must be >= 2");
  if (!(settings.t_N > 0.0)) throw DomainError("optimize_protocol: t_N must be positive");
  const double dt = settings.t_N / settings.n_segments;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> alphas(settings.n_segments);
  for (double& a : alphas) a = unit(rng);

  OptimizationRun run;
  run.seed = seed;
  for (long it = 0;; ++it) {
    const auto g = objective_gradient(alphas, dt, params, rho0, settings.fd_step, gradient_exec);
    run.gradient_norm = projected_gradient_norm(alphas, g);
    run.iterations = it;
    if (run.gradient_norm < settings.gradient_tol) {
      run.converged = true;
      break;
    }
    if (it >= settings.max_iterations) break;
    for (std::size_t k = 0; k < alphas.size(); ++k) {
      alphas[k] = std::clamp(alphas[k] + settings.zeta * g[k], 0.0, 1.0);
    }
  }
  run.protocol = Protocol::from_alphas(alphas, dt);
  run.objective = objective(alphas, dt, params, rho0);
  return run;
}

}  // namespace

OptimizationRun optimize_single(const OptimizerSettings& settings, const DriveParams& params,
                                const Mat& rho0, std::uint64_t seed) {
  return optimize_impl(settings, params, rho0, seed, settings.exec);
}

OptimizationReport optimize_protocol(const OptimizerSettings& settings, const DriveParams& params,
                                     const Mat& rho0) {
  if (settings.restarts < 1) throw DomainError("optimize_protocol: restarts must be >= 1");
  OptimizationReport rep;
  rep.runs.resize(settings.restarts);
  // Parallelism goes to the restarts; each run is sequential inside.
  for_each_index(
      settings.restarts,
      [&](std::ptrdiff_t r) {
        rep.runs[r] = optimize_impl(settings, params, rho0, settings.seed + r, Exec::serial);
      },
      settings.exec);
  rep.best = *std::max_element(rep.runs.begin(), rep.runs.end(),
                               [](const auto& a, const auto& b) { return a.objective < b.objective; });
  return rep;
}

StepFit fit_step(const Protocol& protocol) {
  const auto& seg = protocol.segments;
  const int n = static_cast<int>(seg.size());
  if (n == 0) throw DomainError("fit_step: empty protocol");
  StepFit fit;
  fit.mean_deviation = 1e300;
  for (int s = 0; s <= n; ++s) {
    double dev = 0.0;
    for (int k = 0; k < n; ++k) dev += std::abs(seg[k].alpha - (k < s ? 1.0 : 0.0));
    dev /= n;
    if (dev < fit.mean_deviation) {
      fit.mean_deviation = dev;
      fit.switch_index = s;
    }
  }
  for (int k = 0; k < fit.switch_index; ++k) fit.t_switch += seg[k].dt;
  const int q = std::max(1, n / 4);
  for (int k = 0; k < q; ++k) {
    fit.head_mean += seg[k].alpha / q;
    fit.tail_mean += seg[n - 1 - k].alpha / q;
  }
  return fit;
}

}  // namespace qbd::control
