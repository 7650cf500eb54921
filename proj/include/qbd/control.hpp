// Driven single-battery charging: H(alpha) = (w/2)[alpha sigma_x + (1 - alpha) sigma_z]
// with the sigma_z-basis dissipator of the collision model.
#pragma once

#include "qbd/parallel.hpp"
#include "qbd/qcore.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qbd::control {

struct DriveParams {
  double omega = 1.5;
  double epsilon = 0.5;
  double beta = 1.0;

  double gamma_up() const;    // eps^2 e^{+beta w/2}/Z1, ground -> excited
  double gamma_down() const;  // eps^2 e^{-beta w/2}/Z1, excited -> ground
};

struct Segment {
  double dt = 0.0;
  double alpha = 0.0;
};

struct Protocol {
  std::vector<Segment> segments;

  double total_time() const;
  void validate() const;

  static Protocol constant(double alpha, double total_time, int n_segments = 1);
  /// alpha = 1 on [0, t_d), alpha = 0 on [t_d, total_time).
  static Protocol double_quench(double t_d, double total_time);
  static Protocol from_alphas(const std::vector<double>& alphas, double dt);

  std::string to_json() const;
  static Protocol from_json(const std::string& text);
};

HermitianOperator h_alpha(double alpha, double omega);
/// No domain check; used for finite-difference probes straddling the bounds.
Mat h_alpha_unchecked(double alpha, double omega);

/// 4x4 generator in the row-major (rho00, rho01, rho10, rho11) basis.
Superoperator generator(double alpha, const DriveParams& params);
Eigen::Matrix4cd generator_matrix(double alpha, const DriveParams& params);
/// Dissipative part alone (alpha independent).
Eigen::Matrix4cd dissipator_matrix(const DriveParams& params);

/// Energy-flow functionals on vec(rho): heat rate into the bath and the switching
/// work rate tr(H D rho) + Qdot.
Eigen::RowVector4cd heat_rate_row(const DriveParams& params);
Eigen::RowVector4cd energy_row(const Mat& h);

/// (1 - p/2) rho + (p/2) sum_i P_i rho P_i with P_i the eigenprojectors of h.
DensityMatrix dephase(const DensityMatrix& rho, double p, const HermitianOperator& h);
Mat dephase_matrix(const Mat& rho, double p, const Mat& h);

enum class DephasingMode { none, cadence, zeno };

struct Dephasing {
  DephasingMode mode = DephasingMode::none;
  double p = 0.0;
  /// Substep length between applications; <= 0 selects 1e-2 min(1/w, 1/eps^2).
  double cadence = 0.0;
};

struct DrivenLedger {
  double W_drive = 0.0;
  double W_interaction = 0.0;
  double Q = 0.0;
  double dE = 0.0;
  double ergotropy_final = 0.0;
  double first_law_residual = 0.0;  // |W_drive + W_interaction - dE - Q|
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Mat> states;
  std::vector<double> alphas;  // Hamiltonian active on the interval ending at times[i]
};

struct DrivenResult {
  Trajectory trajectory;
  DrivenLedger ledger;
  double eta_heat = 0.0;  // 1 - Q/W
  double eta_ergo = 0.0;  // ergotropy/W
  double power = 0.0;     // dE / total time
};

/// Runs the protocol from rho0. Energies are measured with the bare (w/2) sigma_z;
/// quenches into the first segment and back to alpha = 0 after the last one are
/// charged to W_drive. samples_per_segment controls trajectory output only.
DrivenResult driven_run(const Protocol& protocol, const DensityMatrix& rho0,
                        const DriveParams& params, const Dephasing& dephasing = {},
                        int samples_per_segment = 1);

Trajectory propagate_protocol(const Protocol& protocol, const DensityMatrix& rho0,
                              const DriveParams& params, int samples_per_segment = 1);

// ---- optimization ------------------------------------------------------

struct OptimizerSettings {
  double t_N = 4.0;
  int n_segments = 100;
  double zeta = 0.5;
  int restarts = 10;
  std::uint64_t seed = 1;
  long max_iterations = 100000;
  double gradient_tol = 1e-6;
  double fd_step = 1e-6;
  Exec exec = Exec::openmp;
};

/// Excited-state population after piecewise-constant evolution.
double objective(const std::vector<double>& alphas, double dt, const DriveParams& params,
                 const Mat& rho0);

/// Central differences at each alpha_k, reusing cached forward states and backward
/// row vectors so each component costs two 4x4 exponentials. Components are
/// independent and run under `exec`.
std::vector<double> objective_gradient(const std::vector<double>& alphas, double dt,
                                       const DriveParams& params, const Mat& rho0, double h,
                                       Exec exec);

/// Reference gradient by full re-propagation for every perturbed alpha_k.
std::vector<double> objective_gradient_naive(const std::vector<double>& alphas, double dt,
                                             const DriveParams& params, const Mat& rho0,
                                             double h);

/// Largest |g_k| after zeroing components that push a clipped alpha outward.
double projected_gradient_norm(const std::vector<double>& alphas, const std::vector<double>& g);

struct OptimizationRun {
  Protocol protocol;
  double objective = 0.0;
  long iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
  std::uint64_t seed = 0;
};

struct OptimizationReport {
  OptimizationRun best;
  std::vector<OptimizationRun> runs;  // ordered by restart index
};

OptimizationRun optimize_single(const OptimizerSettings& settings, const DriveParams& params,
                                const Mat& rho0, std::uint64_t seed);

/// Independent restarts with seeds seed, seed+1, ...; restarts run under settings.exec.
OptimizationReport optimize_protocol(const OptimizerSettings& settings, const DriveParams& params,
                                     const Mat& rho0);

struct StepFit {
  double t_switch = 0.0;
  int switch_index = 0;          // first segment of the alpha = 0 part
  double mean_deviation = 0.0;   // mean |alpha_k - step_k|
  double head_mean = 0.0;        // mean alpha over the first quarter
  double tail_mean = 0.0;        // mean alpha over the last quarter
};

/// Best single step from 1 to 0 in the least-absolute-deviation sense.
StepFit fit_step(const Protocol& protocol);

}  // namespace qbd::control
