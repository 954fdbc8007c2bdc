#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "zenochem/model.hpp"
#include "zenochem/propagation.hpp"
#include "zenochem/spin_algebra.hpp"

namespace zenochem {

enum class OutputKind { transient_absorption, mfe };

// A named experiment: a set of fields (first entry is the reference) run
// under one or both theories with shared parameters.
struct Scenario {
  std::string name;
  std::string description;
  SystemSpec spec;
  SimParams params_base;
  std::vector<double> fields_uT{0.0};  // along z; fields_uT[0] is the reference
  std::vector<Theory> theories{Theory::quantum};
  std::vector<OutputKind> outputs{OutputKind::mfe};
  // Relaxation rate used at every non-reference field instead of
  // params_base.kSR (high-field spin relaxation).
  std::optional<double> field_relaxation_rate;
  // Default kSR family for relaxation_sweep.
  std::vector<double> sweep_relaxation_rates;

  double reference_field() const { return fields_uT.front(); }
  bool has_field(double field_uT) const;
  bool has_output(OutputKind kind) const;
  // Parameters of the cell (field, theory).
  SimParams params_for(double field_uT, Theory theory) const;
  void validate() const;
};

struct MfeCurve {
  std::vector<double> times;
  std::vector<double> values;
};

struct CurveShape {
  std::size_t sign_changes = 0;
  int first_sign = 0;  // sign of the first value above threshold, 0 if none
  double peak_magnitude = 0.0;
  double max_value = 0.0;
  double min_value = 0.0;
};

// Sign analysis ignoring |value| <= threshold.
CurveShape analyze_curve(const MfeCurve& curve, double threshold = 1e-6);

std::vector<double> transient_absorption(const Trajectory& traj);

// Pointwise difference of the two absorption signals.
MfeCurve mfe_from(const Trajectory& at_field, const Trajectory& at_reference);

MfeCurve mfe(const Scenario& scenario, double field_uT, double reference_uT, Theory theory);

struct ScenarioCell {
  double field_uT = 0.0;
  Theory theory = Theory::quantum;
  SimParams params;
  Trajectory trajectory;
};

// Propagates every (field, theory) cell, theory-major order.
std::vector<ScenarioCell> run_scenario(const Scenario& scenario,
                                       const PropagationOptions& options = {});

struct LabeledMfe {
  Theory theory = Theory::quantum;
  double kSR = 0.0;
  double field_uT = 0.0;
  double reference_uT = 0.0;
  MfeCurve curve;
};

// MFE of every non-reference field against the reference for each kSR and
// each theory of the scenario. Output order: kSR-major, then theory, then field.
std::vector<LabeledMfe> relaxation_sweep(const Scenario& scenario,
                                         const std::vector<double>& kSR_values);

// Worker count for cell-level parallelism: ZENOCHEM_THREADS if set to a
// positive integer, otherwise the hardware concurrency.
std::size_t worker_count();

// Runs task(0..count-1) on up to worker_count() threads. The first exception
// (by index) is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task);

// Hyperfine tensor diag(8, 2, 0) us^-1 on one spin-1/2 nucleus coupled to
// electron 1, and the low-field recombination rates kS = 0.05, kT = 3.5 us^-1.
SystemSpec single_nucleus_system();
SimParams low_field_params(Theory theory);

const std::vector<Scenario>& builtin_scenarios();
// Throws ConfigError for unknown names.
const Scenario& find_scenario(const std::string& name);

}  // namespace zenochem
