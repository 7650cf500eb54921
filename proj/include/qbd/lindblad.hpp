// Markovian generator of the collision model and its steady states.
#pragma once

#include "qbd/collision.hpp"
#include "qbd/parallel.hpp"
#include "qbd/qcore.hpp"

#include <vector>

namespace qbd::lindblad {

struct Liouvillian {
  Superoperator generator;
  int system_dim = 0;
};

/// D(rho) = -1/2 tr_R [V, [V, rho (x) tau_R]] with V = epsilon * V_unscaled,
/// assembled column by column from the action on matrix units.
Superoperator dissipator(const collision::CollisionSpec& spec, Exec exec = Exec::openmp);

/// -i[H, .]
Superoperator hamiltonian_generator(const Mat& h);

Liouvillian liouvillian(const collision::CollisionSpec& spec, Exec exec = Exec::openmp);

/// Max |t . L| over the vec-trace row t.
double trace_preservation_residual(const Superoperator& l);

Mat propagator(const Liouvillian& l, double t);
DensityMatrix propagate(const Liouvillian& l, const DensityMatrix& rho0, double t);

struct SteadyStateReport {
  std::vector<DensityMatrix> states;
  int kernel_dim = 0;
  int indefinite_directions = 0;
  bool unique = false;
  /// Some singular value sits between the kernel cutoff and 1e-8 (relative).
  bool ill_conditioned = false;
};

SteadyStateReport steady_states(const Liouvillian& l);

struct H0Residuals {
  double system = 0.0;       // ||[H_S, H0]||
  double interaction = 0.0;  // ||[V, H0 (x) I + I (x) H_R]||
};

/// Frobenius norms of the two commutators defining a valid H0.
H0Residuals verify_h0(const HermitianOperator& H_S, const HermitianOperator& H_R,
                      const HermitianOperator& V, const HermitianOperator& H0);

}  // namespace qbd::lindblad
