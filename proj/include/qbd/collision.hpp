// Repeated-interaction (collision) model with per-collision bookkeeping.
#pragma once

#include "qbd/qcore.hpp"

#include <vector>

namespace qbd::collision {

struct CollisionSpec {
  HermitianOperator H_S;
  HermitianOperator H_R;
  HermitianOperator V_unscaled;  // multiplied by epsilon/sqrt(delta_t) at collision time
  double epsilon = 0.0;
  double delta_t = 1e-3;
  double beta = 1.0;

  void validate() const;
  int system_dim() const { return H_S.dim(); }
  int ancilla_dim() const { return H_R.dim(); }
};

/// Energy bookkeeping of one collision. heat > 0 means energy deposited in the ancilla.
struct StepLedger {
  double dE_system = 0.0;
  double heat = 0.0;
  double work = 0.0;
  /// |work - (dE_system + heat)|, work taken from the switching term -g <V>.
  double first_law_residual = 0.0;
};

struct ThermoLedger {
  double work = 0.0;
  double heat = 0.0;
  double dE_system = 0.0;
  long steps = 0;
  double max_first_law_residual = 0.0;

  void add(const StepLedger& s);
};

struct CollisionResult {
  DensityMatrix state;
  StepLedger ledger;
};

CollisionResult collide(const DensityMatrix& rho_s, const CollisionSpec& spec);

/// Precomputed joint unitary and ancilla state for repeated application of one spec.
class CollisionMap {
 public:
  explicit CollisionMap(const CollisionSpec& spec);

  /// One collision on a raw system matrix; returns the new system matrix.
  Mat step(const Mat& rho_s, StepLedger* ledger = nullptr) const;
  /// Joint state before and after one collision (for cross-checks).
  Mat joint_after(const Mat& rho_s) const;
  const CollisionSpec& spec() const { return spec_; }

 private:
  CollisionSpec spec_;
  Mat U_, Ud_, tau_R_, H_S_joint_, H_R_joint_, V_joint_;
  double g_;
};

struct RepeatedRun {
  std::vector<double> times;
  std::vector<DensityMatrix> trajectory;  // trajectory[0] is rho0
  ThermoLedger ledger;
};

/// Applies n_steps collisions, recording every `record_every`-th state and the final one.
RepeatedRun run_repeated(const DensityMatrix& rho0, const CollisionSpec& spec, long n_steps,
                         long record_every = 1);

struct ChargingEfficiency {
  bool charging = false;  // false when work <= 0 ("no charging")
  double eta_heat = 0.0;  // 1 - Q/W
  double eta_ergo = 0.0;  // ergotropy(final)/W
};

ChargingEfficiency charging_efficiency(const ThermoLedger& ledger, const DensityMatrix& rho_final,
                                       const HermitianOperator& H_S);

/// One qubit battery (w/2) sigma_z coupled through sigma+ sigma+ + h.c. to an ancilla
/// with Hamiltonian alpha_R (w/2) sigma_z.
CollisionSpec single_battery(double omega, double epsilon, double beta, double delta_t,
                             double alpha_R = 1.0);

}  // namespace qbd::collision
