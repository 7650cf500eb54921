// Parallel vs collective charging of N qubit batteries.
//
// Joint ordering is (S1..SN, R1..RN). Level k counts excited batteries,
// E_k = w(2k - N)/2, degeneracy g_k = C(N, k).
#pragma once

#include "qbd/collision.hpp"
#include "qbd/lindblad.hpp"
#include "qbd/qcore.hpp"

#include <vector>

namespace qbd::collective {

struct BatteryEnsembleSpec {
  int N = 1;
  double omega = 1.0;
  double epsilon = 1.0;
  double beta = 1.0;
  double delta = 0.01;

  void validate() const;
};

enum class Process { parallel, collective };

/// Sum of (w/2) sigma_z over n qubits.
HermitianOperator system_hamiltonian(int n, double omega);

HermitianOperator build_parallel_V(int N);

struct CollectiveBuild {
  HermitianOperator V;
  /// Prefactor of each exchange block k <-> N-k, indexed by the lower level k.
  std::vector<double> block_prefactors;
  double literal_norm = 0.0;  // ||N sum_k V_{k,N-k}|| before per-block normalization
  double norm = 0.0;
  double parallel_norm = 0.0;
};

/// Exchange dyads between levels k and N-k (all configuration cross terms, both
/// batteries and ancillas moving together), each block normalized so that
/// ||V_collective|| = ||V_parallel|| = N.
CollectiveBuild build_collective(int N);
HermitianOperator build_collective_V(int N);

double operator_norm(const Mat& hermitian);

collision::CollisionSpec charging_spec(const BatteryEnsembleSpec& spec, Process process,
                                       double delta_t = 1e-3);

struct SectorDynamics {
  int N = 0;
  double omega = 0.0;
  double beta = 0.0;
  std::vector<double> energies;      // E_k
  std::vector<double> degeneracies;  // g_k
  std::vector<double> tau;           // relaxation time of the k <-> N-k exchange
  double E_empty = 0.0;
  double E_full = 0.0;

  /// Population of one configuration in level k.
  double population(int k, double t) const;
  double energy(double t) const;
  double total_probability(double t) const;
};

SectorDynamics sector_dynamics(const BatteryEnsembleSpec& spec);

/// Thermal start -> E(t) >= E_full (1 - delta). Parallel uses the closed form,
/// collective uses bisection on the sector energy.
double charge_time(const BatteryEnsembleSpec& spec, Process process);
/// Same target, E(t) from the dense Liouvillian (N <= 3).
double charge_time_dense(const BatteryEnsembleSpec& spec, Process process);

double advantage(const BatteryEnsembleSpec& spec);
double advantage_dense(const BatteryEnsembleSpec& spec);
/// 2 (1 + tanh^2(beta w / 2)).
double advantage_two_closed(double beta_omega);
/// N/k independent collective blocks of size k against the fully parallel process.
double partitioned_advantage(const BatteryEnsembleSpec& spec, int k);

double mutual_info_max_closed(double beta, double omega);
double mutual_info_max_gamma(double gamma);
/// Maximum over time of I(S1:S2) along the dense N = 2 collective trajectory.
double mutual_info_max_numeric(const BatteryEnsembleSpec& spec);

struct ClassicalityReport {
  bool classical = true;
  double max_offdiagonal = 0.0;
};

/// Diagonal in the product energy basis within 1e-10 at every state.
ClassicalityReport classicality_check(const std::vector<DensityMatrix>& trajectory);

}  // namespace qbd::collective
