#include "qbd/collision.hpp"

#include <cmath>

namespace qbd::collision {

void CollisionSpec::validate() const {
  if (H_S.dim() == 0 || H_R.dim() == 0) throw DomainError("CollisionSpec: empty Hamiltonian");
  if (V_unscaled.dim() != H_S.dim() * H_R.dim()) {
    throw DomainError("CollisionSpec: dim(V) must equal dim(H_S) * dim(H_R)");
  }
  if (!(delta_t > 0.0)) throw DomainError("CollisionSpec: delta_t must be positive");
  if (!std::isfinite(epsilon) || !std::isfinite(beta)) {
    throw DomainError("CollisionSpec: epsilon and beta must be finite");
  }
}

void ThermoLedger::add(const StepLedger& s) {
  work += s.work;
  heat += s.heat;
  dE_system += s.dE_system;
  ++steps;
  max_first_law_residual = std::max(max_first_law_residual, s.first_law_residual);
}

CollisionMap::CollisionMap(const CollisionSpec& spec) : spec_(spec) {
  spec_.validate();
  const int ds = spec_.system_dim();
  const int dr = spec_.ancilla_dim();
  g_ = spec_.epsilon / std::sqrt(spec_.delta_t);
  H_S_joint_ = kron(spec_.H_S.matrix(), identity(dr));
  H_R_joint_ = kron(identity(ds), spec_.H_R.matrix());
  V_joint_ = spec_.V_unscaled.matrix();
  const HermitianOperator h_tot(H_S_joint_ + H_R_joint_ + g_ * V_joint_, "H_total");
  U_ = unitary_exp(h_tot, spec_.delta_t);
  Ud_ = U_.adjoint();
  tau_R_ = thermal_state(spec_.H_R, spec_.beta).matrix();
}

Mat CollisionMap::joint_after(const Mat& rho_s) const {
  return U_ * kron(rho_s, tau_R_) * Ud_;
}

Mat CollisionMap::step(const Mat& rho_s, StepLedger* ledger) const {
  const Mat before = kron(rho_s, tau_R_);
  const Mat after = U_ * before * Ud_;
  if (ledger != nullptr) {
    const Mat diff = after - before;
    ledger->dE_system = expectation(diff, H_S_joint_);
    ledger->heat = expectation(diff, H_R_joint_);
    // The joint unitary conserves H_S + H_R + gV, so the work of switching the
    // interaction on and off is -g d<V>.
    ledger->work = -g_ * expectation(diff, V_joint_);
    ledger->first_law_residual = std::abs(ledger->work - ledger->dE_system - ledger->heat);
  }
  const std::vector<int> dims{spec_.system_dim(), spec_.ancilla_dim()};
  return partial_trace(after, dims, {0});
}

CollisionResult collide(const DensityMatrix& rho_s, const CollisionSpec& spec) {
  if (rho_s.dim() != spec.system_dim()) throw DomainError("collide: state dimension mismatch");
  const CollisionMap map(spec);
  StepLedger ledger;
  Mat out = map.step(rho_s.matrix(), &ledger);
  return {DensityMatrix(out, rho_s.basis_dims()), ledger};
}

RepeatedRun run_repeated(const DensityMatrix& rho0, const CollisionSpec& spec, long n_steps,
                         long record_every) {
  if (n_steps < 1) throw DomainError("run_repeated: n_steps must be >= 1");
  if (record_every < 1) throw DomainError("run_repeated: record_every must be >= 1");
  if (rho0.dim() != spec.system_dim()) throw DomainError("run_repeated: state dimension mismatch");
  const CollisionMap map(spec);
  RepeatedRun run;
  run.times.push_back(0.0);
  run.trajectory.push_back(rho0);
  Mat rho = rho0.matrix();
  for (long k = 1; k <= n_steps; ++k) {
    StepLedger s;
    rho = map.step(rho, &s);
    run.ledger.add(s);
    if (k % record_every == 0 || k == n_steps) {
      run.times.push_back(static_cast<double>(k) * spec.delta_t);
      run.trajectory.emplace_back(rho, rho0.basis_dims());
    }
  }
  return run;
}

ChargingEfficiency charging_efficiency(const ThermoLedger& ledger, const DensityMatrix& rho_final,
                                       const HermitianOperator& H_S) {
  ChargingEfficiency eff;
  if (!(ledger.work > 0.0)) return eff;
  eff.charging = true;
  eff.eta_heat = 1.0 - ledger.heat / ledger.work;
  eff.eta_ergo = ergotropy(rho_final, H_S) / ledger.work;
  return eff;
}

CollisionSpec single_battery(double omega, double epsilon, double beta, double delta_t,
                             double alpha_R) {
  using namespace qubit;
  const Mat sp = sigma_plus();
  const Mat v = kron(sp, sp) + kron(sp.adjoint(), sp.adjoint());
  return CollisionSpec{HermitianOperator(0.5 * omega * sigma_z(), "H_S"),
                       HermitianOperator(alpha_R * 0.5 * omega * sigma_z(), "H_R"),
                       HermitianOperator(v, "V"), epsilon, delta_t, beta};
}

}  // namespace qbd::collision
