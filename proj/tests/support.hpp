// Shared helpers for the unit tests.
#pragma once

#include "qbd/qcore.hpp"

#include <random>

namespace testing_support {

using qbd::Mat;

inline Mat random_matrix(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = qbd::cplx(n(rng), n(rng));
  return m;
}

/// Full-rank random state (Ginibre).
inline Mat random_state(int d, std::mt19937_64& rng) {
  const Mat g = random_matrix(d, rng);
  Mat rho = g * g.adjoint();
  return rho / rho.trace();
}

inline Mat random_hermitian(int d, std::mt19937_64& rng) {
  const Mat g = random_matrix(d, rng);
  return 0.5 * (g + g.adjoint());
}

/// |+><+| in the index-0-excited basis.
inline Mat plus_state() {
  Mat p(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  return p;
}

}  // namespace testing_support
