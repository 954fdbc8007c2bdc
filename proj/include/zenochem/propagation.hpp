#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "zenochem/model.hpp"
#include "zenochem/spin_algebra.hpp"

namespace zenochem {

// Time series recorded by propagate(). All scalar series share `times`.
//
// quantum: rho stays normalized, population is the surviving-pair fraction
// N(t) driven by the jump probabilities; phenomenological: rho decays and
// population = Tr rho. absorption is the transient-absorption signal and,
// like population, has the creation convolution applied when kCR is finite.
struct Trajectory {
  Theory theory = Theory::quantum;
  std::vector<double> times;
  std::vector<double> singlet;
  std::vector<double> triplet;
  std::vector<double> trace;
  std::vector<double> population;
  std::vector<double> absorption;
  // Thinned density-matrix samples and the grid indices they were taken at.
  std::vector<std::size_t> rho_indices;
  std::vector<ComplexMatrix> rho_samples;

  std::size_t size() const { return times.size(); }
};

struct PropagationOptions {
  // Keep every stride-th density matrix (index 0 and the final step always
  // included). 0 disables sampling.
  std::size_t rho_sample_stride = 0;
};

// -i[H, rho] - kS {rho, Q_S} - kT {rho, Q_T} - kSR rho
ComplexMatrix rhs_phenomenological(const ComplexMatrix& rho, const ComplexMatrix& h,
                                   double kS, double kT, double kSR,
                                   const ComplexMatrix& qs, const ComplexMatrix& qt);

// -i[H, rho] - (kS + kT)(rho Q_S + Q_S rho - 2 Q_S rho Q_S) - kSR (rho - 1/(4n))
ComplexMatrix rhs_quantum(const ComplexMatrix& rho, const ComplexMatrix& h, double kS,
                          double kT, double kSR, const ComplexMatrix& qs,
                          const ComplexMatrix& qt, std::size_t nuclear_multiplicity);

// Same generator written channel by channel: -i[H,rho] - kS D[Q_S] - kT D[Q_T]
// - kSR (rho - 1/(4n)). Used as a cross-check of the merged form.
ComplexMatrix rhs_quantum_two_channel(const ComplexMatrix& rho, const ComplexMatrix& h,
                                      double kS, double kT, double kSR,
                                      const ComplexMatrix& qs, const ComplexMatrix& qt,
                                      std::size_t nuclear_multiplicity);

// D[B] rho = B^dag B rho + rho B^dag B - 2 B rho B^dag
ComplexMatrix lindblad_dissipator(const ComplexMatrix& jump, const ComplexMatrix& rho);

using Rhs = std::function<ComplexMatrix(const ComplexMatrix&)>;

struct Rk4Result {
  ComplexMatrix next;
  // y, y + dt/2 k1, y + dt/2 k2, y + dt k3
  std::array<ComplexMatrix, 4> stage_states;
};

// Classical RK4 step; the result is re-Hermitized as (M + M^dag)/2. Throws
// IntegrationError naming `step_index` if anything becomes non-finite.
Rk4Result rk4_step_with_stages(const ComplexMatrix& rho, const Rhs& rhs, double dt,
                               std::size_t step_index = 0);
ComplexMatrix step_rk4(const ComplexMatrix& rho, const Rhs& rhs, double dt,
                       std::size_t step_index = 0);

struct JumpProbabilities {
  double singlet = 0.0;
  double triplet = 0.0;
  double total() const { return singlet + triplet; }
};

// pS = 2 kS <Q_S> dt, pT = 2 kT <Q_T> dt over the normalized rho. Throws
// IntegrationError if pS + pT > 1.
JumpProbabilities jump_probabilities(const ComplexMatrix& rho, double kS, double kT,
                                     const ComplexMatrix& qs, const ComplexMatrix& qt,
                                     double dt);

Trajectory propagate(const SystemSpec& spec, const SimParams& params,
                     const PropagationOptions& options = {});

// (f * n_instant)(t) with f(t') = kCR exp(-kCR t') on a uniform grid of step dt.
// n_instant is treated as piecewise linear between grid points and the
// exponential kernel is integrated exactly against it, so the result stays
// accurate for kCR dt >> 1.
std::vector<double> creation_convolution(std::span<const double> n_instant, double kCR,
                                         double dt);

// Vectorized generator L with vec(d rho/dt) = L vec(rho), vec stacking
// columns. For the quantum theory the relaxation target enters as
// kSR Tr(rho) / (4n), which equals the affine form on normalized states.
ComplexMatrix liouvillian_matrix(const SystemSpec& spec, const SimParams& params);
ComplexMatrix liouvillian_matrix(const ComplexMatrix& h, const SpinOperatorSet& ops,
                                 const SimParams& params);

// exp(L t) vec(rho0), reshaped back to a matrix.
ComplexMatrix propagate_exact(const ComplexMatrix& liouvillian, const ComplexMatrix& rho0,
                              double t);

}  // namespace zenochem
