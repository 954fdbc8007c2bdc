#include "zenochem/propagation.hpp"

#include <cmath>
#include <string>
#include <unsupported/Eigen/MatrixFunctions>

#include "zenochem/errors.hpp"

namespace zenochem {

namespace {

void require_same_dims(const ComplexMatrix& rho, const ComplexMatrix& h,
                       const ComplexMatrix& qs, const ComplexMatrix& qt, const char* where) {
  const auto d = rho.rows();
  if (rho.cols() != d || h.rows() != d || h.cols() != d || qs.rows() != d ||
      qs.cols() != d || qt.rows() != d || qt.cols() != d) {
    throw ValidationError(std::string(where) + ": dimension mismatch");
  }
}

ComplexMatrix commutator_term(const ComplexMatrix& h, const ComplexMatrix& rho) {
  const Complex minus_i(0.0, -1.0);
  return minus_i * (h * rho - rho * h);
}

ComplexMatrix relaxation_target(Eigen::Index dim) {
  return ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim);
}

void record(Trajectory& traj, const ComplexMatrix& rho, const SpinOperatorSet& ops,
            double time, double population) {
  traj.times.push_back(time);
  traj.singlet.push_back(expectation(rho, ops.singlet_projector));
  traj.triplet.push_back(expectation(rho, ops.triplet_projector));
  traj.trace.push_back(rho.trace().real());
  traj.population.push_back(population);
}

}  // namespace

ComplexMatrix rhs_phenomenological(const ComplexMatrix& rho, const ComplexMatrix& h,
                                   double kS, double kT, double kSR,
                                   const ComplexMatrix& qs, const ComplexMatrix& qt) {
  require_same_dims(rho, h, qs, qt, "rhs_phenomenological");
  return commutator_term(h, rho) - kS * (rho * qs + qs * rho) - kT * (rho * qt + qt * rho) -
         kSR * rho;
}

ComplexMatrix rhs_quantum(const ComplexMatrix& rho, const ComplexMatrix& h, double kS,
                          double kT, double kSR, const ComplexMatrix& qs,
                          const ComplexMatrix& qt, std::size_t nuclear_multiplicity) {
  require_same_dims(rho, h, qs, qt, "rhs_quantum");
  if (4 * nuclear_multiplicity != static_cast<std::size_t>(rho.rows())) {
    throw ValidationError("rhs_quantum: dimension is not 4n");
  }
  const ComplexMatrix qs_rho = qs * rho;
  ComplexMatrix out = commutator_term(h, rho) -
                      (kS + kT) * (rho * qs + qs_rho - 2.0 * qs_rho * qs);
  if (kSR != 0.0) out -= kSR * (rho - relaxation_target(rho.rows()));
  return out;
}

ComplexMatrix rhs_quantum_two_channel(const ComplexMatrix& rho, const ComplexMatrix& h,
                                      double kS, double kT, double kSR,
                                      const ComplexMatrix& qs, const ComplexMatrix& qt,
                                      std::size_t nuclear_multiplicity) {
  require_same_dims(rho, h, qs, qt, "rhs_quantum_two_channel");
  if (4 * nuclear_multiplicity != static_cast<std::size_t>(rho.rows())) {
    throw ValidationError("rhs_quantum_two_channel: dimension is not 4n");
  }
  // Projectors are Hermitian and idempotent, so D[Q] rho = rho Q + Q rho - 2 Q rho Q.
  return commutator_term(h, rho) - kS * lindblad_dissipator(qs, rho) -
         kT * lindblad_dissipator(qt, rho) - kSR * (rho - relaxation_target(rho.rows()));
}

ComplexMatrix lindblad_dissipator(const ComplexMatrix& jump, const ComplexMatrix& rho) {
  const ComplexMatrix bdag_b = jump.adjoint() * jump;
  return bdag_b * rho + rho * bdag_b - 2.0 * jump * rho * jump.adjoint();
}

Rk4Result rk4_step_with_stages(const ComplexMatrix& rho, const Rhs& rhs, double dt,
                               std::size_t step_index) {
  Rk4Result result;
  result.stage_states[0] = rho;
  const ComplexMatrix k1 = rhs(rho);
  result.stage_states[1] = rho + (0.5 * dt) * k1;
  const ComplexMatrix k2 = rhs(result.stage_states[1]);
  result.stage_states[2] = rho + (0.5 * dt) * k2;
  const ComplexMatrix k3 = rhs(result.stage_states[2]);
  result.stage_states[3] = rho + dt * k3;
  const ComplexMatrix k4 = rhs(result.stage_states[3]);

  ComplexMatrix next = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  result.next = 0.5 * (next + next.adjoint());
  if (!result.next.allFinite()) {
    throw IntegrationError("integration blow-up: non-finite density matrix at step " +
                           std::to_string(step_index));
  }
  return result;
}

ComplexMatrix step_rk4(const ComplexMatrix& rho, const Rhs& rhs, double dt,
                       std::size_t step_index) {
  return rk4_step_with_stages(rho, rhs, dt, step_index).next;
}

JumpProbabilities jump_probabilities(const ComplexMatrix& rho, double kS, double kT,
                                     const ComplexMatrix& qs, const ComplexMatrix& qt,
                                     double dt) {
  // Roundoff can push <Q> a hair below zero; the probabilities cannot be.
  const double singlet = std::max(0.0, expectation(rho, qs));
  const double triplet = std::max(0.0, expectation(rho, qt));
  JumpProbabilities p{2.0 * kS * singlet * dt, 2.0 * kT * triplet * dt};
  if (!std::isfinite(p.total())) {
    throw IntegrationError("jump probabilities are not finite");
  }
  if (p.total() > 1.0) {
    throw IntegrationError("dt too large: pS + pT = " + std::to_string(p.total()) + " > 1");
  }
  return p;
}

Trajectory propagate(const SystemSpec& spec, const SimParams& params,
                     const PropagationOptions& options) {
  params.validate();
  const SpinOperatorSet ops = build_space(spec);
  const ComplexMatrix h = build_hamiltonian(spec, ops, params.field_uT, params.omega_scale).matrix;
  const ComplexMatrix& qs = ops.singlet_projector;
  const ComplexMatrix& qt = ops.triplet_projector;
  const bool quantum = params.theory == Theory::quantum;

  Rhs rhs;
  if (quantum) {
    rhs = [&](const ComplexMatrix& rho) {
      return rhs_quantum(rho, h, params.kS, params.kT, params.kSR, qs, qt,
                         ops.nuclear_multiplicity);
    };
  } else {
    rhs = [&](const ComplexMatrix& rho) {
      return rhs_phenomenological(rho, h, params.kS, params.kT, params.kSR, qs, qt);
    };
  }

  const std::size_t steps = params.step_count();
  Trajectory traj;
  traj.theory = params.theory;
  traj.times.reserve(steps + 1);

  auto maybe_sample = [&](std::size_t index, const ComplexMatrix& rho) {
    const std::size_t stride = options.rho_sample_stride;
    if (stride == 0) return;
    if (index % stride == 0 || index == steps) {
      traj.rho_indices.push_back(index);
      traj.rho_samples.push_back(rho);
    }
  };

  ComplexMatrix rho = initial_state(ops);
  double log_survival = 0.0;
  record(traj, rho, ops, 0.0, 1.0);
  maybe_sample(0, rho);

  for (std::size_t step = 1; step <= steps; ++step) {
    Rk4Result st = rk4_step_with_stages(rho, rhs, params.dt, step);
    double population;
    if (quantum) {
      // Survival N(t) = N(t-dt)(1 - pS - pT) in its dt -> 0 limit, with the
      // per-step loss weighted over the RK4 stage states.
      double loss = 0.0;
      constexpr std::array<double, 4> weights{1.0, 2.0, 2.0, 1.0};
      for (std::size_t s = 0; s < 4; ++s) {
        loss += weights[s] * jump_probabilities(st.stage_states[s], params.kS, params.kT, qs,
                                                qt, params.dt)
                                 .total();
      }
      log_survival -= loss / 6.0;
      population = std::exp(log_survival);
      const double trace = st.next.trace().real();
      if (std::abs(trace - 1.0) > 1e-8) {
        throw IntegrationError("quantum propagation lost normalization at step " +
                               std::to_string(step) + ": Tr rho = " + std::to_string(trace));
      }
    } else {
      population = st.next.trace().real();
    }
    rho = std::move(st.next);
    record(traj, rho, ops, static_cast<double>(step) * params.dt, population);
    maybe_sample(step, rho);
  }

  if (params.kCR) {
    traj.population = creation_convolution(traj.population, *params.kCR, params.dt);
  }
  traj.absorption = traj.population;
  return traj;
}

std::vector<double> creation_convolution(std::span<const double> n_instant, double kCR,
                                         double dt) {
  if (!(kCR > 0.0) || !(dt > 0.0)) {
    throw ValidationError("creation_convolution: kCR and dt must be > 0");
  }
  std::vector<double> out(n_instant.size(), 0.0);
  if (n_instant.empty()) return out;

  // Over one cell [t_i, t_i + dt] with N linear:
  //   y_{i+1} = e^{-x} y_i + w_old N_i + w_new N_{i+1},  x = kCR dt
  //   w_old = (1 - e^{-x}(1 + x)) / x,  w_new = (1 - e^{-x}) - w_old
  const double x = kCR * dt;
  const double decay = std::exp(-x);
  const double one_minus_decay = -std::expm1(-x);
  const double w_old = (one_minus_decay - x * decay) / x;
  const double w_new = one_minus_decay - w_old;
  for (std::size_t i = 1; i < n_instant.size(); ++i) {
    out[i] = decay * out[i - 1] + w_old * n_instant[i - 1] + w_new * n_instant[i];
  }
  return out;
}

ComplexMatrix liouvillian_matrix(const SystemSpec& spec, const SimParams& params) {
  params.validate();
  const SpinOperatorSet ops = build_space(spec);
  const ComplexMatrix h = build_hamiltonian(spec, ops, params.field_uT, params.omega_scale).matrix;
  return liouvillian_matrix(h, ops, params);
}

ComplexMatrix liouvillian_matrix(const ComplexMatrix& h, const SpinOperatorSet& ops,
                                 const SimParams& params) {
  const auto dim = static_cast<Eigen::Index>(ops.dim);
  const std::size_t cap = kDefaultDimensionCap;
  if (ops.dim * ops.dim > cap) {
    throw CapacityError("liouvillian_matrix: dim^2 = " + std::to_string(ops.dim * ops.dim) +
                        " exceeds cap " + std::to_string(cap));
  }
  const ComplexMatrix id = ComplexMatrix::Identity(dim, dim);
  const ComplexMatrix& qs = ops.singlet_projector;
  const ComplexMatrix& qt = ops.triplet_projector;
  // vec(A rho B) = (B^T (x) A) vec(rho)
  auto left = [&](const ComplexMatrix& a) { return kron(id, a, cap); };
  auto right = [&](const ComplexMatrix& b) { return kron(b.transpose(), id, cap); };
  auto sandwich = [&](const ComplexMatrix& a) { return kron(a.transpose(), a, cap); };

  const Complex minus_i(0.0, -1.0);
  ComplexMatrix l = minus_i * (left(h) - right(h));
  const ComplexMatrix id_big = ComplexMatrix::Identity(dim * dim, dim * dim);

  if (params.theory == Theory::quantum) {
    l -= (params.kS + params.kT) * (right(qs) + left(qs) - 2.0 * sandwich(qs));
    if (params.kSR != 0.0) {
      const ComplexMatrix id_copy = id;
      const Eigen::Map<const Eigen::VectorXcd> vec_id(id_copy.data(), dim * dim);
      // rho -> Tr(rho) 1/(4n); Tr(rho) = vec(1)^T vec(rho)
      l -= params.kSR * (id_big - (vec_id * vec_id.transpose()) / static_cast<double>(dim));
    }
  } else {
    l -= params.kS * (right(qs) + left(qs));
    l -= params.kT * (right(qt) + left(qt));
    l -= params.kSR * id_big;
  }
  return l;
}

ComplexMatrix propagate_exact(const ComplexMatrix& liouvillian, const ComplexMatrix& rho0,
                              double t) {
  const Eigen::Index dim = rho0.rows();
  if (liouvillian.rows() != dim * dim || liouvillian.cols() != dim * dim) {
    throw ValidationError("propagate_exact: Liouvillian does not match density matrix");
  }
  const ComplexMatrix generator = liouvillian * t;
  const ComplexMatrix propagator = generator.exp();
  const Eigen::Map<const Eigen::VectorXcd> vec_rho0(rho0.data(), dim * dim);
  const Eigen::VectorXcd vec_rho = propagator * vec_rho0;
  return Eigen::Map<const ComplexMatrix>(vec_rho.data(), dim, dim);
}

}  // namespace zenochem
