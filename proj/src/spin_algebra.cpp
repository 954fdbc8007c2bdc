#include "zenochem/spin_algebra.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "zenochem/errors.hpp"

namespace zenochem {

namespace {

bool is_half_integer_spin(double spin) {
  if (!std::isfinite(spin) || spin < 0.5 - 1e-12) return false;
  const double twice = 2.0 * spin;
  return std::abs(twice - std::round(twice)) <= 1e-12;
}

std::size_t multiplicity(double spin) {
  return static_cast<std::size_t>(std::llround(2.0 * spin)) + 1;
}

// Places `op` at tensor slot `slot` of a product space with factor dims `dims`.
ComplexMatrix embed(const ComplexMatrix& op, std::size_t slot,
                    const std::vector<std::size_t>& dims) {
  std::size_t left = 1, right = 1;
  for (std::size_t i = 0; i < slot; ++i) left *= dims[i];
  for (std::size_t i = slot + 1; i < dims.size(); ++i) right *= dims[i];
  const auto id_left = ComplexMatrix::Identity(left, left);
  const auto id_right = ComplexMatrix::Identity(right, right);
  return kron(kron(id_left, op, std::numeric_limits<std::size_t>::max()),
              id_right, std::numeric_limits<std::size_t>::max());
}

}  // namespace

std::size_t SystemSpec::nuclear_multiplicity() const {
  std::size_t n = 1;
  for (const auto& nucleus : nuclei) n *= multiplicity(nucleus.spin);
  return n;
}

std::size_t SystemSpec::dimension() const { return 4 * nuclear_multiplicity(); }

void SystemSpec::validate() const {
  for (std::size_t j = 0; j < nuclei.size(); ++j) {
    const auto& nucleus = nuclei[j];
    if (!is_half_integer_spin(nucleus.spin)) {
      throw ValidationError("nucleus " + std::to_string(j) +
                            ": spin must be a positive half-integer, got " +
                            std::to_string(nucleus.spin));
    }
    if (nucleus.coupled_electron != 1 && nucleus.coupled_electron != 2) {
      throw ValidationError("nucleus " + std::to_string(j) +
                            ": coupled_electron must be 1 or 2");
    }
    if (!nucleus.hyperfine.allFinite()) {
      throw ValidationError("nucleus " + std::to_string(j) +
                            ": hyperfine tensor has non-finite entries");
    }
  }
}

NuclearSpinOperators spin_matrices(double spin) {
  if (!is_half_integer_spin(spin)) {
    throw ValidationError("spin must be a positive half-integer, got " +
                          std::to_string(spin));
  }
  const auto d = static_cast<Eigen::Index>(multiplicity(spin));
  ComplexMatrix raise = ComplexMatrix::Zero(d, d);
  ComplexMatrix z = ComplexMatrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double m = spin - static_cast<double>(i);
    z(i, i) = m;
    // <m+1| I+ |m> lives at row i-1, column i.
    if (i > 0) raise(i - 1, i) = std::sqrt(spin * (spin + 1.0) - m * (m + 1.0));
  }
  const ComplexMatrix lower = raise.adjoint();
  return {0.5 * (raise + lower), (raise - lower) / Complex(0.0, 2.0), z};
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b,
                   std::size_t dimension_cap) {
  const auto rows = static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(b.rows());
  const auto cols = static_cast<std::size_t>(a.cols()) * static_cast<std::size_t>(b.cols());
  if (rows > dimension_cap || cols > dimension_cap) {
    throw CapacityError("kron: product dimension " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " exceeds cap " +
                        std::to_string(dimension_cap));
  }
  ComplexMatrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

SpinOperatorSet build_space(const SystemSpec& spec, std::size_t dimension_cap) {
  spec.validate();

  // Guard the product before forming it; many large nuclei would overflow.
  std::vector<std::size_t> dims{2, 2};
  double dim_estimate = 4.0;
  for (const auto& nucleus : spec.nuclei) {
    dims.push_back(multiplicity(nucleus.spin));
    dim_estimate *= static_cast<double>(dims.back());
  }
  if (dim_estimate > static_cast<double>(dimension_cap)) {
    throw CapacityError("Hilbert dimension " + std::to_string(static_cast<long double>(dim_estimate)) +
                        " exceeds cap " + std::to_string(dimension_cap));
  }

  SpinOperatorSet ops;
  ops.dim = spec.dimension();
  ops.nuclear_multiplicity = spec.nuclear_multiplicity();

  const auto electron = spin_matrices(0.5);
  ops.s1x = embed(electron.x, 0, dims);
  ops.s1y = embed(electron.y, 0, dims);
  ops.s1z = embed(electron.z, 0, dims);
  ops.s2x = embed(electron.x, 1, dims);
  ops.s2y = embed(electron.y, 1, dims);
  ops.s2z = embed(electron.z, 1, dims);

  for (std::size_t j = 0; j < spec.nuclei.size(); ++j) {
    const auto local = spin_matrices(spec.nuclei[j].spin);
    ops.nuclei.push_back({embed(local.x, j + 2, dims), embed(local.y, j + 2, dims),
                          embed(local.z, j + 2, dims)});
  }

  const ComplexMatrix s1_dot_s2 = ops.s1x * ops.s2x + ops.s1y * ops.s2y + ops.s1z * ops.s2z;
  const ComplexMatrix id = ops.identity();
  ops.singlet_projector = 0.25 * id - s1_dot_s2;
  ops.triplet_projector = 0.75 * id + s1_dot_s2;
  return ops;
}

double expectation(const ComplexMatrix& rho, const ComplexMatrix& obs) {
  if (rho.rows() != obs.rows() || rho.cols() != obs.cols() || rho.rows() != rho.cols()) {
    throw ValidationError("expectation: dimension mismatch (" +
                          std::to_string(rho.rows()) + " vs " +
                          std::to_string(obs.rows()) + ")");
  }
  // Tr(rho obs) = sum_ij rho_ij obs_ji
  const Complex value = (rho.array() * obs.transpose().array()).sum();
  if (std::abs(value.imag()) > 1e-10 && is_hermitian(obs) && is_hermitian(rho, 1e-10)) {
    throw IntegrationError("expectation: imaginary residue " +
                           std::to_string(value.imag()) + " for Hermitian observable");
  }
  return value.real();
}

double hermiticity_defect(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const ComplexMatrix& m, double tol) {
  return hermiticity_defect(m) <= tol;
}

double min_eigenvalue(const ComplexMatrix& m) {
  const ComplexMatrix hermitian_part = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace zenochem
