#include "zenochem/model.hpp"

#include <array>
#include <cmath>
#include <string>

#include "zenochem/errors.hpp"

namespace zenochem {

std::string_view to_string(Theory theory) {
  switch (theory) {
    case Theory::quantum:
      return "quantum";
    case Theory::phenomenological:
      return "phenomenological";
  }
  return "unknown";
}

Theory parse_theory(std::string_view text) {
  if (text == "quantum") return Theory::quantum;
  if (text == "phenomenological") return Theory::phenomenological;
  throw ValidationError("unknown theory '" + std::string(text) +
                        "' (expected quantum or phenomenological)");
}

std::size_t SimParams::step_count() const {
  return static_cast<std::size_t>(std::llround(t_max / dt));
}

void SimParams::validate() const {
  auto check_rate = [](double value, const char* name) {
    if (!std::isfinite(value) || value < 0.0) {
      throw ValidationError(std::string(name) + " must be finite and >= 0, got " +
                            std::to_string(value));
    }
  };
  check_rate(kS, "kS");
  check_rate(kT, "kT");
  check_rate(kSR, "kSR");
  if (kCR && !(std::isfinite(*kCR) && *kCR > 0.0)) {
    throw ValidationError("kCR must be finite and > 0 (or instantaneous), got " +
                          std::to_string(*kCR));
  }
  if (!field_uT.allFinite()) throw ValidationError("field has non-finite components");
  if (!std::isfinite(omega_scale)) throw ValidationError("omega_scale must be finite");
  if (!(std::isfinite(dt) && dt > 0.0)) {
    throw ValidationError("dt must be finite and > 0, got " + std::to_string(dt));
  }
  if (!(std::isfinite(t_max) && t_max > 0.0)) {
    throw ValidationError("t_max must be finite and > 0, got " + std::to_string(t_max));
  }
  const double stiffness = dt * (2.0 * kS + 2.0 * kT + kSR);
  if (stiffness >= kStabilityBound) {
    throw ValidationError("dt * (2 kS + 2 kT + kSR) = " + std::to_string(stiffness) +
                          " violates the RK4 stability guard (< 0.1)");
  }
}

Hamiltonian build_hamiltonian(const SystemSpec& spec, const SpinOperatorSet& ops,
                              const Eigen::Vector3d& field_uT, double omega_scale) {
  if (spec.nuclei.size() != ops.nuclei.size() || spec.dimension() != ops.dim) {
    throw ValidationError("build_hamiltonian: operator set does not match system spec");
  }
  const auto dim = static_cast<Eigen::Index>(ops.dim);
  ComplexMatrix h = ComplexMatrix::Zero(dim, dim);

  const double field = field_uT.norm();
  if (field > 0.0) {
    const Eigen::Vector3d b_hat = field_uT / field;
    const double omega = omega_scale * kLarmorPerMicrotesla * field;
    h += omega * (b_hat.x() * (ops.s1x + ops.s2x) + b_hat.y() * (ops.s1y + ops.s2y) +
                  b_hat.z() * (ops.s1z + ops.s2z));
  }

  for (std::size_t j = 0; j < spec.nuclei.size(); ++j) {
    const auto& nucleus = spec.nuclei[j];
    const auto& nuc = ops.nuclei[j];
    const std::array<const ComplexMatrix*, 3> nuclear{&nuc.x, &nuc.y, &nuc.z};
    const std::array<const ComplexMatrix*, 3> electron =
        nucleus.coupled_electron == 1
            ? std::array<const ComplexMatrix*, 3>{&ops.s1x, &ops.s1y, &ops.s1z}
            : std::array<const ComplexMatrix*, 3>{&ops.s2x, &ops.s2y, &ops.s2z};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        const double coupling = nucleus.hyperfine(a, b);
        if (coupling != 0.0) h += coupling * (*nuclear[a]) * (*electron[b]);
      }
    }
  }
  return {h};
}

ComplexMatrix initial_state(const SpinOperatorSet& ops) {
  return ops.singlet_projector / static_cast<double>(ops.nuclear_multiplicity);
}

}  // namespace zenochem
