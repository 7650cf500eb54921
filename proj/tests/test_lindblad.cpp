#include "oracles.hpp"
#include "support.hpp"

#include "qbd/collective.hpp"
#include "qbd/collision.hpp"
#include "qbd/lindblad.hpp"

#include <doctest.h>

#include <cmath>

using namespace qbd;
using namespace qbd::lindblad;

namespace {

double z1(double beta, double omega) { return 2.0 * std::cosh(beta * omega / 2.0); }

}  // namespace

TEST_SUITE("lindblad") {
  TEST_CASE("zero coupling gives a zero dissipator") {
    const auto spec = collision::single_battery(1.5, 0.0, 1.0, 1e-3);
    CHECK(dissipator(spec).matrix().norm() == 0.0);
  }

  TEST_CASE("single-battery jump rates") {
    const double omega = 1.5, beta = 1.0, eps = 0.6;
    const auto d = dissipator(collision::single_battery(omega, eps, beta, 1e-3)).matrix();
    const double gp = eps * eps * std::exp(beta * omega / 2.0) / z1(beta, omega);
    const double gm = eps * eps * std::exp(-beta * omega / 2.0) / z1(beta, omega);
    // vec order (00, 01, 10, 11), index 0 excited.
    CHECK(d(0, 0).real() == doctest::Approx(-gm));
    CHECK(d(0, 3).real() == doctest::Approx(gp));
    CHECK(d(3, 0).real() == doctest::Approx(gm));
    CHECK(d(3, 3).real() == doctest::Approx(-gp));
    CHECK(d(1, 1).real() == doctest::Approx(-eps * eps / 2.0));
    CHECK(trace_preservation_residual(Superoperator(d)) < 1e-14);
  }

  TEST_CASE("dissipator is the short-collision limit of the collision map") {
    std::mt19937_64 rng(12);
    const double dt = 1e-6;
    for (int n : {1, 2}) {
      const auto spec = collective::charging_spec({n, 1.3, 0.8, 0.7, 0.01}, collective::Process::collective, dt);
      const auto L = liouvillian(spec);
      const int d = spec.system_dim();
      for (int t = 0; t < 3; ++t) {
        const Mat rho = testing_support::random_state(d, rng);
        const auto ref = oracle::collision_oracle(rho, spec.H_S.matrix(), spec.H_R.matrix(),
                                                  spec.V_unscaled.matrix(), spec.epsilon, dt, spec.beta);
        const Mat u = oracle::expm_taylor(cplx(0.0, -dt) * spec.H_S.matrix());
        const Mat fd = (ref.rho_s - u * rho * u.adjoint()) / dt;
        const Mat dr = dissipator(spec).apply(rho);
        CHECK((fd - dr).norm() < 1e-4);
        CHECK((L.generator.apply(rho) - dr + kI * commutator(spec.H_S.matrix(), rho)).norm() < 1e-12);
      }
    }
  }

  TEST_CASE("propagation") {
    const double omega = 1.5, beta = 1.0, eps = 0.5;
    const auto L = liouvillian(collision::single_battery(omega, eps, beta, 1e-3));
    const DensityMatrix rho0(qubit::thermal(omega, beta));
    CHECK((propagate(L, rho0, 0.0).matrix() - rho0.matrix()).norm() < 1e-15);
    const double p0 = oracle::excited_population(omega, beta);
    const double pf = oracle::excited_population(omega, -beta);
    for (double t : {0.5, 2.0, 7.0}) {
      const double expected = pf + (p0 - pf) * std::exp(-eps * eps * t);
      CHECK(propagate(L, rho0, t).population(0) == doctest::Approx(expected).epsilon(1e-12));
    }
    std::mt19937_64 rng(3);
    const Mat rho = testing_support::random_state(2, rng);
    const CVec ref = oracle::rk4(L.generator.matrix(), vec(rho), 3.0, 3000);
    CHECK((vec(propagate(L, DensityMatrix(rho), 3.0).matrix()) - ref).norm() < 1e-10);
  }

  TEST_CASE("two-battery collective relaxation time") {
    const double omega = 1.5, eps = 0.8;
    for (double beta : {0.2, 1.0, 3.0}) {
      const auto spec = collective::charging_spec({2, omega, eps, beta, 0.01}, collective::Process::collective);
      const auto L = liouvillian(spec);
      const HermitianOperator h = collective::system_hamiltonian(2, omega);
      const DensityMatrix rho0(kron(qubit::thermal(omega, beta), qubit::thermal(omega, beta)), {2, 2});
      const double th = std::tanh(beta * omega / 2.0);
      const double tau = 1.0 / (2.0 * eps * eps * (1.0 + th * th));
      const double e0 = energy(rho0, h);
      const double ef = -e0;
      for (double t : {0.1, 0.4}) {
        const double e = energy(propagate(L, rho0, t), h);
        CHECK((ef - e) / (ef - e0) == doctest::Approx(std::exp(-t / tau)).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("steady states") {
    const double omega = 1.5, beta = 1.0;
    {
      const auto r = steady_states(liouvillian(collision::single_battery(omega, 0.5, beta, 1e-3)));
      CHECK(r.unique);
      CHECK(r.kernel_dim == 1);
      CHECK(trace_distance(r.states.front().matrix(), qubit::thermal(omega, -beta)) < 1e-10);
    }
    {
      const auto r = steady_states(liouvillian(collision::single_battery(omega, 0.0, beta, 1e-3)));
      CHECK_FALSE(r.unique);
      CHECK(r.kernel_dim == 2);
    }
    {
      const Mat full = kron(qubit::thermal(omega, -beta), qubit::thermal(omega, -beta));
      const auto par = steady_states(liouvillian(
          collective::charging_spec({2, omega, 1.0, beta, 0.01}, collective::Process::parallel)));
      CHECK(par.unique);
      CHECK(trace_distance(par.states.front().matrix(), full) < 1e-9);
      // The collective coupling conserves system parity: one steady state per parity sector.
      const auto L = liouvillian(collective::charging_spec({2, omega, 1.0, beta, 0.01}, collective::Process::collective));
      const auto col = steady_states(L);
      CHECK_FALSE(col.unique);
      CHECK(col.kernel_dim == 2);
      const DensityMatrix rho0(kron(qubit::thermal(omega, beta), qubit::thermal(omega, beta)), {2, 2});
      CHECK(trace_distance(propagate(L, rho0, 200.0).matrix(), full) < 1e-9);
    }
  }

  TEST_CASE("property: any start relaxes to the unique steady state") {
    std::mt19937_64 rng(44);
    for (int n : {1, 2, 3}) {
      const auto process = n == 1 ? collective::Process::collective : collective::Process::parallel;
      const auto spec = collective::charging_spec({n, 1.5, 0.7, 1.0, 0.01}, process);
      const auto L = liouvillian(spec);
      const auto ss = steady_states(L);
      REQUIRE(ss.unique);
      // Slowest nonzero decay rate from the spectrum.
      Eigen::ComplexEigenSolver<Mat> es(L.generator.matrix());
      double slowest = 1e300;
      for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const double re = -es.eigenvalues()(i).real();
        if (re > 1e-9) slowest = std::min(slowest, re);
      }
      for (int t = 0; t < 5; ++t) {
        const DensityMatrix rho0(testing_support::random_state(spec.system_dim(), rng));
        const auto rho = propagate(L, rho0, 20.0 / slowest);
        CHECK(trace_distance(rho.matrix(), ss.states.front().matrix()) <= 1e-6);
      }
    }
  }

  TEST_CASE("H0 commutation checks") {
    const auto spec = collision::single_battery(1.5, 0.5, 1.0, 1e-3);
    const HermitianOperator minus(-spec.H_S.matrix());
    const auto good = verify_h0(spec.H_S, spec.H_R, spec.V_unscaled, minus);
    CHECK(good.system <= 1e-12);
    CHECK(good.interaction <= 1e-12);
    const auto bad = verify_h0(spec.H_S, spec.H_R, spec.V_unscaled, spec.H_S);
    CHECK(bad.interaction > 0.1);
    const auto h3 = collective::system_hamiltonian(3, 1.5);
    const auto c3 = verify_h0(h3, h3, collective::build_collective_V(3), HermitianOperator(-h3.matrix()));
    CHECK(c3.system <= 1e-10);
    CHECK(c3.interaction <= 1e-10);
  }

  TEST_CASE("collision model converges to the Liouvillian at first order") {
    const double omega = 1.5, beta = 1.0, eps = 0.5, T = 2.0;
    std::mt19937_64 rng(77);
    const DensityMatrix rho0(testing_support::random_state(2, rng));
    const auto L = liouvillian(collision::single_battery(omega, eps, beta, 1e-3));
    const Mat exact = propagate(L, rho0, T).matrix();
    std::vector<double> err;
    for (double k : {1e-2, 5e-3, 2.5e-3}) {
      const double dt = k / (eps * eps);
      const long n = std::lround(T / dt);
      const auto run = collision::run_repeated(rho0, collision::single_battery(omega, eps, beta, T / n), n, n);
      err.push_back(trace_distance(run.trajectory.back().matrix(), exact));
    }
    CHECK(err[0] / err[1] == doctest::Approx(2.0).epsilon(0.2));
    CHECK(err[1] / err[2] == doctest::Approx(2.0).epsilon(0.2));
  }
}
