#include "qbd/lindblad.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace qbd::lindblad {

Superoperator dissipator(const collision::CollisionSpec& spec, Exec exec) {
  spec.validate();
  const int d = spec.system_dim();
  const int dr = spec.ancilla_dim();
  const Mat v = spec.epsilon * spec.V_unscaled.matrix();
  const Mat tau = thermal_state(spec.H_R, spec.beta).matrix();
  const std::vector<int> dims{d, dr};
  Mat out = Mat::Zero(d * d, d * d);
  // Column (i*d + j) is vec(D(|i><j|)); columns are independent.
  for_each_index(
      static_cast<std::ptrdiff_t>(d) * d,
      [&](std::ptrdiff_t col) {
        Mat unit = Mat::Zero(d, d);
        unit(col / d, col % d) = 1.0;
        const Mat joint = kron(unit, tau);
        const Mat inner = commutator(v, joint);
        const Mat outer = commutator(v, inner);
        out.col(col) = vec(-0.5 * partial_trace(outer, dims, {0}));
      },
      exec);
  return Superoperator(out);
}

Superoperator hamiltonian_generator(const Mat& h) {
  const int d = static_cast<int>(h.rows());
  return Superoperator(-kI * (sandwich(h, identity(d)) - sandwich(identity(d), h)));
}

Liouvillian liouvillian(const collision::CollisionSpec& spec, Exec exec) {
  const Mat l = hamiltonian_generator(spec.H_S.matrix()).matrix() + dissipator(spec, exec).matrix();
  return {Superoperator(l), spec.system_dim()};
}

double trace_preservation_residual(const Superoperator& l) {
  return (vec_trace_row(l.system_dim()) * l.matrix()).cwiseAbs().maxCoeff();
}

Mat propagator(const Liouvillian& l, double t) {
  if (t < 0.0) throw DomainError("propagator: t must be non-negative");
  return matrix_exp(l.generator.matrix() * t);
}

DensityMatrix propagate(const Liouvillian& l, const DensityMatrix& rho0, double t) {
  if (rho0.dim() != l.system_dim) throw DomainError("propagate: dimension mismatch");
  const Mat rho = unvec(propagator(l, t) * vec(rho0.matrix()), l.system_dim);
  return DensityMatrix(rho, rho0.basis_dims());
}

SteadyStateReport steady_states(const Liouvillian& l) {
  const Mat& g = l.generator.matrix();
  const int d = l.system_dim;
  Eigen::BDCSVD<Mat> svd(g, Eigen::ComputeFullV);
  const RVec& sv = svd.singularValues();
  const double scale = std::max(sv(0), 1e-300);
  const Eigen::Index n = sv.size();

  SteadyStateReport rep;
  std::vector<Eigen::Index> kernel;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sv(i) < 1e-10 * scale) {
      kernel.push_back(i);
    } else if (sv(i) < 1e-8 * scale) {
      rep.ill_conditioned = true;
    }
  }
  rep.kernel_dim = static_cast<int>(kernel.size());

  // Hermitian real span of the kernel, orthonormalized as real vectors.
  std::vector<Mat> basis;
  std::vector<RVec> reals;
  auto as_real = [](const Mat& h) {
    const CVec v = vec(h);
    RVec r(2 * v.size());
    r << v.real(), v.imag();
    return r;
  };
  for (Eigen::Index idx : kernel) {
    const Mat m = unvec(svd.matrixV().col(idx), d);
    for (const Mat& cand : {Mat(0.5 * (m + m.adjoint())), Mat(0.5 * kI * (m - m.adjoint()))}) {
      RVec r = as_real(cand);
      Mat h = cand;
      for (std::size_t k = 0; k < reals.size(); ++k) {
        const double c = reals[k].dot(r);
        r -= c * reals[k];
        h -= c * basis[k];
      }
      const double norm = r.norm();
      if (norm > 1e-8 && static_cast<int>(basis.size()) < rep.kernel_dim) {
        reals.push_back(r / norm);
        basis.push_back(h / norm);
      }
    }
  }
  for (const Mat& h : basis) {
    const cplx tr = h.trace();
    if (std::abs(tr) < 1e-8) {
      ++rep.indefinite_directions;
      continue;
    }
    const Mat rho = h / tr;
    if (density_violation(rho).empty()) {
      rep.states.emplace_back(rho);
    } else {
      ++rep.indefinite_directions;
    }
  }
  rep.unique = rep.kernel_dim == 1 && rep.states.size() == 1;
  return rep;
}

H0Residuals verify_h0(const HermitianOperator& H_S, const HermitianOperator& H_R,
                      const HermitianOperator& V, const HermitianOperator& H0) {
  if (H_S.dim() != H0.dim() || V.dim() != H0.dim() * H_R.dim()) {
    throw DomainError("verify_h0: dimension mismatch");
  }
  H0Residuals r;
  r.system = commutator(H_S.matrix(), H0.matrix()).norm();
  const Mat g = kron(H0.matrix(), identity(H_R.dim())) + kron(identity(H0.dim()), H_R.matrix());
  r.interaction = commutator(V.matrix(), g).norm();
  return r;
}

}  // namespace qbd::lindblad
