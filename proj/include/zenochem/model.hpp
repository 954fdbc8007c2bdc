#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <string_view>

#include "zenochem/spin_algebra.hpp"

namespace zenochem {

// Electron "Larmor frequency parameter" per unit field: 1.4 MHz/G taken in
// bare us^-1, i.e. 0.014 us^-1 per uT.
inline constexpr double kLarmorPerMicrotesla = 0.014;

enum class Theory { quantum, phenomenological };

std::string_view to_string(Theory theory);
// Throws ValidationError for anything but "quantum" / "phenomenological".
Theory parse_theory(std::string_view text);

// Physical and numerical parameters of one propagation. Rates in us^-1,
// times in us, field in uT.
struct SimParams {
  double kS = 0.0;
  double kT = 0.0;
  double kSR = 0.0;
  // Creation rate; empty means instantaneous creation at t = 0.
  std::optional<double> kCR;
  Eigen::Vector3d field_uT = Eigen::Vector3d::Zero();
  Theory theory = Theory::quantum;
  double t_max = 10.0;
  double dt = 1e-3;
  double omega_scale = 1.0;

  // Explicit RK4 guard: dt * (2 kS + 2 kT + kSR) must stay below this.
  static constexpr double kStabilityBound = 0.1;

  std::size_t step_count() const;
  // Throws ValidationError on the first violated invariant.
  void validate() const;
};

struct Hamiltonian {
  ComplexMatrix matrix;  // us^-1, Hermitian
};

// H = omega (s1 + s2) . b_hat + sum_j I_j . A_j . s_e(j), with
// omega = omega_scale * 0.014 * |B|.
Hamiltonian build_hamiltonian(const SystemSpec& spec, const SpinOperatorSet& ops,
                              const Eigen::Vector3d& field_uT, double omega_scale = 1.0);

// Singlet-born pair: rho(0) = Q_S / n.
ComplexMatrix initial_state(const SpinOperatorSet& ops);

}  // namespace zenochem
