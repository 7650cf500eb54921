#include "qbd/collective.hpp"

#include <bit>
#include <cmath>
#include <functional>
#include <sstream>

namespace qbd::collective {

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Number of excited qubits in configuration mu (digit 0 = excited).
int level_of(unsigned mu, int n) { return n - std::popcount(mu); }

/// Smallest t with f(t) >= target for non-decreasing f, bracket by doubling.
double first_crossing(const std::function<double(double)>& f, double target, double t0) {
  double lo = 0.0, hi = t0;
  int doublings = 0;
  while (f(hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 200) throw NumericalError("charge_time: target energy unreachable");
  }
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) >= target ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

void BatteryEnsembleSpec::validate() const {
  if (N < 1) throw DomainError("BatteryEnsembleSpec: N must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("BatteryEnsembleSpec: delta must be in (0,1)");
  if (!(beta > 0.0)) throw DomainError("BatteryEnsembleSpec: beta must be positive");
  if (!(omega > 0.0)) throw DomainError("BatteryEnsembleSpec: omega must be positive");
  if (!(epsilon > 0.0)) throw DomainError("BatteryEnsembleSpec: epsilon must be positive");
}

HermitianOperator system_hamiltonian(int n, double omega) {
  Mat h = Mat::Zero(1 << n, 1 << n);
  for (int s = 0; s < n; ++s) h += qubit::embed(0.5 * omega * qubit::sigma_z(), s, n);
  return HermitianOperator(h, "H_S");
}

HermitianOperator build_parallel_V(int N) {
  if (N < 1) throw DomainError("build_parallel_V: N must be >= 1");
  const int n = 2 * N;
  Mat v = Mat::Zero(1 << n, 1 << n);
  const Mat sp = qubit::sigma_plus();
  for (int i = 0; i < N; ++i) {
    const Mat term = qubit::embed(sp, i, n) * qubit::embed(sp, N + i, n);
    v += term + term.adjoint();
  }
  return HermitianOperator(v, "V_parallel");
}

double operator_norm(const Mat& hermitian) {
  return spectral(hermitian).eigenvalues.cwiseAbs().maxCoeff();
}

CollectiveBuild build_collective(int N) {
  if (N < 1) throw DomainError("build_collective_V: N must be >= 1");
  const unsigned configs = 1u << N;
  const int dim = 1 << (2 * N);
  std::vector<std::vector<unsigned>> levels(N + 1);
  for (unsigned mu = 0; mu < configs; ++mu) levels[level_of(mu, N)].push_back(mu);
  auto matched = [&](unsigned mu) { return static_cast<Eigen::Index>(mu * configs + mu); };

  Mat literal = Mat::Zero(dim, dim);
  for (int k = 0; k <= N; ++k) {
    for (unsigned a : levels[k]) {
      for (unsigned b : levels[N - k]) literal(matched(a), matched(b)) += static_cast<double>(N);
    }
  }

  CollectiveBuild out;
  out.block_prefactors.assign(N + 1, 0.0);
  Mat v = Mat::Zero(dim, dim);
  for (int k = 0; 2 * k <= N; ++k) {
    const int l = N - k;
    const double g = static_cast<double>(levels[k].size());
    if (k != l) {
      const double c = N / g;
      out.block_prefactors[k] = c;
      for (unsigned a : levels[k]) {
        for (unsigned b : levels[l]) {
          v(matched(a), matched(b)) += c;
          v(matched(b), matched(a)) += c;
        }
      }
    } else {
      // Self-paired middle level: the mu = mu' terms are projectors, not exchanges.
      const double c = N / (g - 1.0);
      out.block_prefactors[k] = c;
      for (unsigned a : levels[k]) {
        for (unsigned b : levels[k]) {
          if (a != b) v(matched(a), matched(b)) += c;
        }
      }
    }
  }
  out.literal_norm = operator_norm(literal);
  out.norm = operator_norm(v);
  out.parallel_norm = static_cast<double>(N);
  if (std::abs(out.norm - out.parallel_norm) > 1e-9) {
    std::ostringstream os;
    os << "build_collective_V: ||V_collective|| = " << out.norm << " but ||V_parallel|| = "
       << out.parallel_norm;
    throw NumericalError(os.str());
  }
  out.V = HermitianOperator(v, "V_collective");
  return out;
}

HermitianOperator build_collective_V(int N) { return build_collective(N).V; }

collision::CollisionSpec charging_spec(const BatteryEnsembleSpec& spec, Process process,
                                       double delta_t) {
  spec.validate();
  const HermitianOperator h = system_hamiltonian(spec.N, spec.omega);
  HermitianOperator v = process == Process::parallel ? build_parallel_V(spec.N)
                                                     : build_collective_V(spec.N);
  return collision::CollisionSpec{h, HermitianOperator(h.matrix(), "H_R"), std::move(v),
                                  spec.epsilon, delta_t, spec.beta};
}

double SectorDynamics::population(int k, double t) const {
  const double z = std::pow(2.0 * std::cosh(0.5 * beta * omega), N);
  const double e = energies[k];
  return (std::exp(beta * e) + (std::exp(-beta * e) - std::exp(beta * e)) * std::exp(-t / tau[k])) /
         z;
}

double SectorDynamics::energy(double t) const {
  double s = 0.0;
  for (int k = 0; k <= N; ++k) s += degeneracies[k] * population(k, t) * energies[k];
  return s;
}

double SectorDynamics::total_probability(double t) const {
  double s = 0.0;
  for (int k = 0; k <= N; ++k) s += degeneracies[k] * population(k, t);
  return s;
}

SectorDynamics sector_dynamics(const BatteryEnsembleSpec& spec) {
  spec.validate();
  SectorDynamics sd;
  sd.N = spec.N;
  sd.omega = spec.omega;
  sd.beta = spec.beta;
  const double z = std::pow(2.0 * std::cosh(0.5 * spec.beta * spec.omega), spec.N);
  const double e2 = spec.epsilon * spec.epsilon;
  const double n2 = static_cast<double>(spec.N) * spec.N;
  for (int k = 0; k <= spec.N; ++k) {
    const double ek = 0.5 * spec.omega * (2.0 * k - spec.N);
    const double g = binomial(spec.N, k);
    sd.energies.push_back(ek);
    sd.degeneracies.push_back(g);
    // Each of the g_k^2 configuration pairs carries rate (N/g_k)^2 eps^2 times the
    // ancilla weight of the source configuration.
    sd.tau.push_back(g * z / (2.0 * std::cosh(spec.beta * ek) * n2 * e2));
  }
  const double th = std::tanh(0.5 * spec.beta * spec.omega);
  sd.E_empty = -0.5 * spec.N * spec.omega * th;
  sd.E_full = 0.5 * spec.N * spec.omega * th;
  return sd;
}

double charge_time(const BatteryEnsembleSpec& spec, Process process) {
  const SectorDynamics sd = sector_dynamics(spec);
  if (!(sd.E_full > 0.0)) throw NumericalError("charge_time: E_full must be positive");
  const double e2 = spec.epsilon * spec.epsilon;
  if (process == Process::parallel) {
    return std::log((sd.E_full - sd.E_empty) / (spec.delta * sd.E_full)) / e2;
  }
  return first_crossing([&](double t) { return sd.energy(t); }, sd.E_full * (1.0 - spec.delta),
                        1.0 / e2);
}

double charge_time_dense(const BatteryEnsembleSpec& spec, Process process) {
  spec.validate();
  if (spec.N > 3) throw DomainError("charge_time_dense: N <= 3 only");
  const auto cs = charging_spec(spec, process);
  const auto l = lindblad::liouvillian(cs);
  const CVec v0 = vec(thermal_state(cs.H_S, spec.beta).matrix());
  const Eigen::RowVectorXcd h_row = vec(cs.H_S.matrix().transpose()).transpose();
  const double e_full = 0.5 * spec.N * spec.omega * std::tanh(0.5 * spec.beta * spec.omega);
  auto energy = [&](double t) { return (h_row * (matrix_exp(l.generator.matrix() * t) * v0))(0).real(); };
  return first_crossing(energy, e_full * (1.0 - spec.delta), 1.0 / (spec.epsilon * spec.epsilon));
}

double advantage(const BatteryEnsembleSpec& spec) {
  return charge_time(spec, Process::parallel) / charge_time(spec, Process::collective);
}

double advantage_dense(const BatteryEnsembleSpec& spec) {
  return charge_time_dense(spec, Process::parallel) / charge_time_dense(spec, Process::collective);
}

double advantage_two_closed(double beta_omega) {
  const double th = std::tanh(0.5 * beta_omega);
  return 2.0 * (1.0 + th * th);
}

double partitioned_advantage(const BatteryEnsembleSpec& spec, int k) {
  spec.validate();
  if (k < 1 || spec.N % k != 0) throw DomainError("partitioned_advantage: k must divide N");
  BatteryEnsembleSpec block = spec;
  block.N = k;
  const SectorDynamics sd = sector_dynamics(block);
  const double blocks = static_cast<double>(spec.N / k);
  const double e_full = blocks * sd.E_full;
  const double t_block = first_crossing([&](double t) { return blocks * sd.energy(t); },
                                        e_full * (1.0 - spec.delta),
                                        1.0 / (spec.epsilon * spec.epsilon));
  return charge_time(spec, Process::parallel) / t_block;
}

double mutual_info_max_closed(double beta, double omega) {
  const double z1 = 2.0 * std::cosh(0.5 * beta * omega);
  const double z = z1 * z1;
  return 2.0 * std::log(2.0) + ((z - 2.0) / z) * std::log((z - 2.0) / (2.0 * z)) -
         (2.0 / z) * std::log(z);
}

double mutual_info_max_gamma(double gamma) {
  if (gamma < 2.0 || gamma > 4.0) throw DomainError("mutual_info_max_gamma: Gamma in [2,4]");
  const double a = gamma / 4.0;
  const double tail = a < 1.0 ? (1.0 - a) * std::log(0.5 - gamma / 8.0) : 0.0;
  return 2.0 * std::log(2.0) + a * std::log(gamma / 8.0) + tail;
}

double mutual_info_max_numeric(const BatteryEnsembleSpec& spec) {
  if (spec.N != 2) throw DomainError("mutual_info_max_numeric: N = 2 only");
  const auto cs = charging_spec(spec, Process::collective);
  const auto l = lindblad::liouvillian(cs);
  const CVec v0 = vec(thermal_state(cs.H_S, spec.beta).matrix());
  auto info = [&](double t) {
    const Mat rho = unvec(matrix_exp(l.generator.matrix() * t) * v0, 4);
    return mutual_information(DensityMatrix(rho, {2, 2}), {0});
  };
  const double tau = sector_dynamics(spec).tau[0];
  const int grid = 400;
  const double t_end = 10.0 * tau;
  int best = 0;
  double best_val = -1.0;
  for (int i = 0; i <= grid; ++i) {
    const double val = info(t_end * i / grid);
    if (val > best_val) {
      best_val = val;
      best = i;
    }
  }
  double a = t_end * std::max(best - 1, 0) / grid;
  double b = t_end * std::min(best + 1, grid) / grid;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = info(c), fd = info(d);
  while (b - a > 1e-9 * std::max(1.0, b)) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = info(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = info(d);
    }
  }
  return std::max({best_val, fc, fd});
}

ClassicalityReport classicality_check(const std::vector<DensityMatrix>& trajectory) {
  ClassicalityReport rep;
  for (const auto& rho : trajectory) {
    Mat off = rho.matrix();
    off.diagonal().setZero();
    rep.max_offdiagonal = std::max(rep.max_offdiagonal, off.cwiseAbs().maxCoeff());
  }
  rep.classical = rep.max_offdiagonal <= 1e-10;
  return rep;
}

}  // namespace qbd::collective
