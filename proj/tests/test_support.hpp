#pragma once

#include <random>

#include "zenochem/spin_algebra.hpp"

namespace zenochem::testutil {

inline ComplexMatrix random_matrix(std::mt19937_64& rng, Eigen::Index dim) {
  std::normal_distribution<double> normal;
  ComplexMatrix m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = Complex(normal(rng), normal(rng));
  }
  return m;
}

inline ComplexMatrix random_hermitian(std::mt19937_64& rng, Eigen::Index dim) {
  const ComplexMatrix m = random_matrix(rng, dim);
  return 0.5 * (m + m.adjoint());
}

// Random full-rank density matrix (positive, unit trace).
inline ComplexMatrix random_density(std::mt19937_64& rng, Eigen::Index dim) {
  const ComplexMatrix m = random_matrix(rng, dim);
  ComplexMatrix rho = m * m.adjoint();
  return rho / rho.trace().real();
}

inline Eigen::Matrix3d random_tensor(std::mt19937_64& rng, double scale = 5.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::Matrix3d a;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) a(i, j) = u(rng);
  }
  return a;
}

}  // namespace zenochem::testutil
