#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <vector>

namespace zenochem {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr std::size_t kDefaultDimensionCap = 4096;

// A magnetic nucleus hyperfine-coupled to one of the two unpaired electrons.
// The tensor is in us^-1 and enters the Hamiltonian as I . A . s_e.
struct Nucleus {
  double spin = 0.5;
  Eigen::Matrix3d hyperfine = Eigen::Matrix3d::Zero();
  int coupled_electron = 1;  // 1 or 2
};

struct SystemSpec {
  std::vector<Nucleus> nuclei;

  // n = prod(2 I_j + 1)
  std::size_t nuclear_multiplicity() const;
  // 4 n
  std::size_t dimension() const;
  // Throws ValidationError on non-half-integer spins, bad electron indices or
  // non-finite tensors.
  void validate() const;
};

struct NuclearSpinOperators {
  ComplexMatrix x, y, z;
};

// Operators of the full radical-pair space. Tensor-factor ordering is
// electron1 (x) electron2 (x) nucleus_1 (x) ... (x) nucleus_j, in declaration
// order; all spin operators are dimensionless (eigenvalues m, hbar = 1).
struct SpinOperatorSet {
  std::size_t dim = 0;
  std::size_t nuclear_multiplicity = 0;
  ComplexMatrix s1x, s1y, s1z;
  ComplexMatrix s2x, s2y, s2z;
  std::vector<NuclearSpinOperators> nuclei;
  ComplexMatrix singlet_projector;  // Q_S = 1/4 - s1.s2
  ComplexMatrix triplet_projector;  // Q_T = 3/4 + s1.s2

  ComplexMatrix identity() const { return ComplexMatrix::Identity(dim, dim); }
};

SpinOperatorSet build_space(const SystemSpec& spec,
                            std::size_t dimension_cap = kDefaultDimensionCap);

// Standard Kronecker product. Throws CapacityError when the product dimension
// (rows or columns) exceeds the cap.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b,
                   std::size_t dimension_cap = kDefaultDimensionCap);

// Spin-I matrices (Ix, Iy, Iz) in the |I, m> basis ordered m = I, I-1, ..., -I.
NuclearSpinOperators spin_matrices(double spin);

// Re Tr(rho . obs). Throws ValidationError on a dimension mismatch and
// IntegrationError if obs is Hermitian but the trace has an imaginary part
// larger than 1e-10.
double expectation(const ComplexMatrix& rho, const ComplexMatrix& obs);

// max |M - M^dag| elementwise.
double hermiticity_defect(const ComplexMatrix& m);
bool is_hermitian(const ComplexMatrix& m, double tol = 1e-12);

// Smallest eigenvalue of the Hermitian part of m.
double min_eigenvalue(const ComplexMatrix& m);

// max_ij |a_ij - b_ij|
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace zenochem
