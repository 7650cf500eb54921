#include "qbd/qcore.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace qbd {

namespace {

int product(const std::vector<int>& dims) {
  return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<>());
}

void require_square(const Mat& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DomainError(std::string(what) + ": matrix must be square and non-empty");
  }
}

}  // namespace

HermitianOperator::HermitianOperator(Mat m, std::string label)
    : m_(std::move(m)), label_(std::move(label)) {
  require_square(m_, "HermitianOperator");
  const double err = hermiticity_error(m_);
  if (err > tol::hermitian) {
    std::ostringstream os;
    os << "HermitianOperator '" << label_ << "': |H - H^dag| = " << err;
    throw DomainError(os.str());
  }
  m_ = 0.5 * (m_ + m_.adjoint()).eval();
}

DensityMatrix::DensityMatrix(const Mat& rho, std::vector<int> basis_dims)
    : dims_(std::move(basis_dims)) {
  require_square(rho, "DensityMatrix");
  if (dims_.empty()) dims_ = {static_cast<int>(rho.rows())};
  if (product(dims_) != rho.rows()) {
    throw DomainError("DensityMatrix: basis_dims product does not match dimension");
  }
  const std::string why = density_violation(rho);
  if (!why.empty()) throw NumericalError("DensityMatrix: " + why);
  rho_ = 0.5 * (rho + rho.adjoint());
}

Mat SpectralDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.cast<cplx>().asDiagonal() * eigenvectors.adjoint();
}

Superoperator::Superoperator(Mat m) : m_(std::move(m)) {
  require_square(m_, "Superoperator");
  d_ = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m_.rows()))));
  if (d_ * d_ != m_.rows()) throw DomainError("Superoperator: size is not a square");
}

Mat Superoperator::apply(const Mat& rho) const { return unvec(m_ * vec(rho), d_); }

double hermiticity_error(const Mat& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

std::string density_violation(const Mat& rho) {
  std::ostringstream os;
  const double herm = hermiticity_error(rho);
  if (herm > tol::hermitian) {
    os << "not Hermitian (" << herm << ")";
    return os.str();
  }
  const double tr_err = std::abs(rho.trace() - 1.0);
  if (tr_err > tol::trace) {
    os << "trace off by " << tr_err;
    return os.str();
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  if (lo < tol::min_eigenvalue) {
    os << "negative eigenvalue " << lo;
    return os.str();
  }
  return {};
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

DensityMatrix kron(const DensityMatrix& a, const DensityMatrix& b) {
  std::vector<int> dims = a.basis_dims();
  dims.insert(dims.end(), b.basis_dims().begin(), b.basis_dims().end());
  return DensityMatrix(kron(a.matrix(), b.matrix()), dims);
}

Mat commutator(const Mat& a, const Mat& b) { return a * b - b * a; }

Mat identity(int d) { return Mat::Identity(d, d); }

CVec vec(const Mat& rho) {
  const Eigen::Index d = rho.rows();
  CVec v(d * rho.cols());
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < rho.cols(); ++j) v(i * rho.cols() + j) = rho(i, j);
  }
  return v;
}

Mat unvec(const CVec& v, int d) {
  if (v.size() != static_cast<Eigen::Index>(d) * d) throw DomainError("unvec: size mismatch");
  Mat rho(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) rho(i, j) = v(i * d + j);
  }
  return rho;
}

Mat sandwich(const Mat& a, const Mat& b) { return kron(a, b.transpose()); }

Eigen::RowVectorXcd vec_trace_row(int d) {
  Eigen::RowVectorXcd t = Eigen::RowVectorXcd::Zero(d * d);
  for (int i = 0; i < d; ++i) t(i * d + i) = 1.0;
  return t;
}

Mat partial_trace(const Mat& rho, const std::vector<int>& dims, const std::vector<int>& keep) {
  const int n = static_cast<int>(dims.size());
  if (product(dims) != rho.rows()) throw DomainError("partial_trace: dims do not match matrix");
  std::vector<bool> kept(n, false);
  for (int k : keep) {
    if (k < 0 || k >= n || kept[k]) throw DomainError("partial_trace: invalid subsystem index");
    kept[k] = true;
  }
  // Subsystem 0 is the most significant digit of the joint index.
  const int total = static_cast<int>(rho.rows());
  std::vector<int> keep_idx(total), traced_idx(total);
  int dk = 1;
  for (int s = 0; s < n; ++s) {
    if (kept[s]) dk *= dims[s];
  }
  for (int a = 0; a < total; ++a) {
    int rem = a, kmul = 1, tmul = 1, ki = 0, ti = 0;
    for (int s = n - 1; s >= 0; --s) {
      const int digit = rem % dims[s];
      rem /= dims[s];
      if (kept[s]) {
        ki += digit * kmul;
        kmul *= dims[s];
      } else {
        ti += digit * tmul;
        tmul *= dims[s];
      }
    }
    keep_idx[a] = ki;
    traced_idx[a] = ti;
  }
  Mat out = Mat::Zero(dk, dk);
  for (int a = 0; a < total; ++a) {
    for (int b = 0; b < total; ++b) {
      if (traced_idx[a] == traced_idx[b]) out(keep_idx[a], keep_idx[b]) += rho(a, b);
    }
  }
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
  std::vector<int> sorted = keep;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> dims;
  for (int k : sorted) {
    if (k < 0 || k >= static_cast<int>(rho.basis_dims().size())) {
      throw DomainError("partial_trace: invalid subsystem index");
    }
    dims.push_back(rho.basis_dims()[k]);
  }
  return DensityMatrix(partial_trace(rho.matrix(), rho.basis_dims(), sorted), dims);
}

SpectralDecomposition spectral(const Mat& hermitian) {
  require_square(hermitian, "spectral");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (hermitian + hermitian.adjoint()));
  if (es.info() != Eigen::Success) throw NumericalError("spectral: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

RVec clipped_spectrum(const Mat& rho) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
  RVec ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < tol::min_eigenvalue) {
      throw NumericalError("state has eigenvalue below tolerance: " + std::to_string(ev(i)));
    }
    if (ev(i) < 0.0) ev(i) = 0.0;
  }
  return ev / ev.sum();
}

Mat matrix_exp(const Mat& m) {
  require_square(m, "matrix_exp");
  return m.exp();
}

Mat unitary_exp(const HermitianOperator& h, double t) {
  const auto sd = spectral(h.matrix());
  CVec phases(sd.eigenvalues.size());
  for (Eigen::Index i = 0; i < phases.size(); ++i) {
    phases(i) = std::exp(-kI * sd.eigenvalues(i) * t);
  }
  return sd.eigenvectors * phases.asDiagonal() * sd.eigenvectors.adjoint();
}

DensityMatrix thermal_state(const HermitianOperator& h, double beta) {
  if (!std::isfinite(beta)) throw DomainError("thermal_state: beta must be finite");
  const auto sd = spectral(h.matrix());
  RVec logw = -beta * sd.eigenvalues;
  const double shift = logw.maxCoeff();
  RVec w = (logw.array() - shift).exp();
  w /= w.sum();
  Mat rho = sd.eigenvectors * w.cast<cplx>().asDiagonal() * sd.eigenvectors.adjoint();
  return DensityMatrix(rho);
}

double expectation(const Mat& rho, const Mat& op) { return (rho * op).trace().real(); }

double energy(const DensityMatrix& rho, const HermitianOperator& h) {
  if (rho.dim() != h.dim()) throw DomainError("energy: dimension mismatch");
  return expectation(rho.matrix(), h.matrix());
}

double ergotropy(const Mat& rho, const Mat& h) {
  if (rho.rows() != h.rows()) throw DomainError("ergotropy: dimension mismatch");
  RVec r = clipped_spectrum(rho);
  std::sort(r.data(), r.data() + r.size(), std::greater<>());
  const RVec e = spectral(h).eigenvalues;  // ascending
  const double passive = r.dot(e);
  const double value = expectation(rho, h) - passive;
  return value < 0.0 && value > -1e-12 ? 0.0 : value;
}

double ergotropy(const DensityMatrix& rho, const HermitianOperator& h) {
  return ergotropy(rho.matrix(), h.matrix());
}

double vn_entropy(const Mat& rho) {
  const RVec ev = clipped_spectrum(rho);
  double s = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > tol::entropy_cutoff) s -= ev(i) * std::log(ev(i));
  }
  return s;
}

double vn_entropy(const DensityMatrix& rho) { return vn_entropy(rho.matrix()); }

double mutual_information(const DensityMatrix& rho, const std::vector<int>& subsystems_a) {
  const int n = static_cast<int>(rho.basis_dims().size());
  std::vector<int> a = subsystems_a, b;
  std::sort(a.begin(), a.end());
  for (int s = 0; s < n; ++s) {
    if (!std::binary_search(a.begin(), a.end(), s)) b.push_back(s);
  }
  if (a.empty() || b.empty()) throw DomainError("mutual_information: split must be proper");
  const Mat ra = partial_trace(rho.matrix(), rho.basis_dims(), a);
  const Mat rb = partial_trace(rho.matrix(), rho.basis_dims(), b);
  return vn_entropy(ra) + vn_entropy(rb) - vn_entropy(rho.matrix());
}

std::vector<Mat> energy_projectors(const Mat& h) {
  const auto sd = spectral(h);
  std::vector<Mat> out;
  const Eigen::Index d = sd.eigenvalues.size();
  Eigen::Index start = 0;
  for (Eigen::Index i = 1; i <= d; ++i) {
    const bool split =
        i == d || std::abs(sd.eigenvalues(i) - sd.eigenvalues(start)) >
                      tol::degeneracy * std::max(1.0, std::abs(sd.eigenvalues(start)));
    if (split) {
      const Mat v = sd.eigenvectors.middleCols(start, i - start);
      out.push_back(v * v.adjoint());
      start = i;
    }
  }
  return out;
}

Mat dephase_full(const Mat& rho, const Mat& h) {
  Mat out = Mat::Zero(rho.rows(), rho.cols());
  for (const Mat& p : energy_projectors(h)) out += p * rho * p;
  return out;
}

double rel_entropy_coherence(const Mat& rho, const Mat& h) {
  if (rho.rows() != h.rows()) throw DomainError("rel_entropy_coherence: dimension mismatch");
  const double c = vn_entropy(dephase_full(rho, h)) - vn_entropy(rho);
  return std::max(c, 0.0);
}

double rel_entropy_coherence(const DensityMatrix& rho, const HermitianOperator& h) {
  return rel_entropy_coherence(rho.matrix(), h.matrix());
}

double trace_distance(const Mat& rho, const Mat& sigma) {
  const Mat diff = rho - sigma;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (diff + diff.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw DomainError("trace_distance: dimension mismatch");
  return trace_distance(rho.matrix(), sigma.matrix());
}

namespace qubit {

Mat sigma_x() {
  Mat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Mat sigma_y() {
  Mat m(2, 2);
  m << 0, -kI, kI, 0;
  return m;
}

Mat sigma_z() {
  Mat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Mat sigma_plus() {
  Mat m = Mat::Zero(2, 2);
  m(0, 1) = 1.0;
  return m;
}

Mat sigma_minus() { return sigma_plus().adjoint(); }

Mat embed(const Mat& op, int site, int n) {
  if (site < 0 || site >= n) throw DomainError("embed: site out of range");
  Mat out = Mat::Identity(1, 1);
  for (int s = 0; s < n; ++s) out = kron(out, s == site ? op : identity(2));
  return out;
}

Mat thermal(double omega, double beta) {
  const double x = beta * omega / 2.0;
  // Stable for large |x|: divide by the larger Boltzmann weight.
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = 1.0 / (1.0 + std::exp(2.0 * x));
  m(1, 1) = 1.0 / (1.0 + std::exp(-2.0 * x));
  return m;
}

}  // namespace qubit

}  // namespace qbd
