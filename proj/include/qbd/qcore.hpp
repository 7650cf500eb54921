// Dense linear algebra and quantum-information primitives.
//
// Conventions used throughout the library:
//   * two-level systems use index 0 = excited, index 1 = ground, so
//     sigma_z = diag(1, -1) and sigma_plus = |0><1|;
//   * density matrices are vectorized row-major,
//     vec(rho)[i*d + j] = rho(i, j), hence vec(A rho B) = (A (x) B^T) vec(rho);
//   * entropies are in nats.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qbd {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

/// Raised when a state or generator leaves its validity envelope.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on inconsistent dimensions or out-of-domain arguments.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace tol {
inline constexpr double hermitian = 1e-10;
inline constexpr double trace = 1e-10;
inline constexpr double min_eigenvalue = -1e-9;
inline constexpr double entropy_cutoff = 1e-14;
inline constexpr double degeneracy = 1e-9;
}  // namespace tol

class HermitianOperator {
 public:
  HermitianOperator() = default;
  explicit HermitianOperator(Mat m, std::string label = {});

  const Mat& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  const std::string& label() const { return label_; }

 private:
  Mat m_;
  std::string label_;
};

class DensityMatrix {
 public:
  DensityMatrix() = default;
  /// Validates Hermiticity, unit trace and positivity; stores the Hermitian part.
  /// An empty basis_dims means a single subsystem of dimension rho.rows().
  explicit DensityMatrix(const Mat& rho, std::vector<int> basis_dims = {});

  const Mat& matrix() const { return rho_; }
  int dim() const { return static_cast<int>(rho_.rows()); }
  const std::vector<int>& basis_dims() const { return dims_; }

  double population(int i) const { return rho_(i, i).real(); }

 private:
  Mat rho_;
  std::vector<int> dims_;
};

/// Eigenvalues ascending, eigenvectors as orthonormal columns.
struct SpectralDecomposition {
  RVec eigenvalues;
  Mat eigenvectors;

  Mat reconstruct() const;
};

class Superoperator {
 public:
  Superoperator() = default;
  explicit Superoperator(Mat m);

  const Mat& matrix() const { return m_; }
  int system_dim() const { return d_; }
  Mat apply(const Mat& rho) const;

 private:
  Mat m_;
  int d_ = 0;
};

// ---- validation ----------------------------------------------------------

/// Empty string when rho satisfies the DensityMatrix invariants, otherwise a diagnostic.
std::string density_violation(const Mat& rho);
double hermiticity_error(const Mat& m);

// ---- structural helpers --------------------------------------------------

Mat kron(const Mat& a, const Mat& b);
DensityMatrix kron(const DensityMatrix& a, const DensityMatrix& b);
Mat commutator(const Mat& a, const Mat& b);
Mat identity(int d);

CVec vec(const Mat& rho);
Mat unvec(const CVec& v, int d);
/// Superoperator matrix of rho -> A rho B.
Mat sandwich(const Mat& a, const Mat& b);
/// Row vector t with t . vec(rho) = tr(rho).
Eigen::RowVectorXcd vec_trace_row(int d);

Mat partial_trace(const Mat& rho, const std::vector<int>& dims, const std::vector<int>& keep);
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep);

// ---- spectra and functions -----------------------------------------------

SpectralDecomposition spectral(const Mat& hermitian);
/// Eigenvalues of a state with round-off negatives in [-1e-9, 0) clipped and renormalized.
RVec clipped_spectrum(const Mat& rho);
Mat matrix_exp(const Mat& m);
/// exp(-i H t) through the spectral decomposition of H.
Mat unitary_exp(const HermitianOperator& h, double t);

// ---- quantum-information quantities --------------------------------------

DensityMatrix thermal_state(const HermitianOperator& h, double beta);
double expectation(const Mat& rho, const Mat& op);
double energy(const DensityMatrix& rho, const HermitianOperator& h);
double ergotropy(const DensityMatrix& rho, const HermitianOperator& h);
double ergotropy(const Mat& rho, const Mat& h);
double vn_entropy(const DensityMatrix& rho);
double vn_entropy(const Mat& rho);
double mutual_information(const DensityMatrix& rho, const std::vector<int>& subsystems_a);
/// Projectors onto the eigenspaces of h, degenerate levels grouped within tol::degeneracy.
std::vector<Mat> energy_projectors(const Mat& h);
Mat dephase_full(const Mat& rho, const Mat& h);
double rel_entropy_coherence(const DensityMatrix& rho, const HermitianOperator& h);
double rel_entropy_coherence(const Mat& rho, const Mat& h);
double trace_distance(const Mat& rho, const Mat& sigma);
double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);

// ---- qubit operators (index 0 = excited) ---------------------------------

namespace qubit {
Mat sigma_x();
Mat sigma_y();
Mat sigma_z();
Mat sigma_plus();
Mat sigma_minus();
/// Single-qubit operator `op` acting on qubit `site` of `n` qubits.
Mat embed(const Mat& op, int site, int n);
/// Two-level Gibbs state e^{-beta (w/2) sigma_z}/Z in index-0-excited order.
Mat thermal(double omega, double beta);
}  // namespace qubit

}  // namespace qbd
