#include "zenochem/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

#include "zenochem/errors.hpp"

namespace zenochem {

bool Scenario::has_field(double field_uT) const {
  return std::find(fields_uT.begin(), fields_uT.end(), field_uT) != fields_uT.end();
}

bool Scenario::has_output(OutputKind kind) const {
  return std::find(outputs.begin(), outputs.end(), kind) != outputs.end();
}

SimParams Scenario::params_for(double field_uT, Theory theory) const {
  SimParams p = params_base;
  p.theory = theory;
  p.field_uT = Eigen::Vector3d(0.0, 0.0, field_uT);
  if (field_relaxation_rate && field_uT != reference_field()) p.kSR = *field_relaxation_rate;
  return p;
}

void Scenario::validate() const {
  if (fields_uT.empty()) throw ValidationError("scenario '" + name + "': no fields");
  const auto refs = std::count(fields_uT.begin(), fields_uT.end(), reference_field());
  if (refs != 1) {
    throw ValidationError("scenario '" + name + "': reference field listed more than once");
  }
  if (theories.empty()) throw ValidationError("scenario '" + name + "': no theories");
  spec.validate();
  for (double field : fields_uT) {
    for (Theory theory : theories) params_for(field, theory).validate();
  }
}

CurveShape analyze_curve(const MfeCurve& curve, double threshold) {
  CurveShape shape;
  int last_sign = 0;
  for (double v : curve.values) {
    shape.peak_magnitude = std::max(shape.peak_magnitude, std::abs(v));
    shape.max_value = std::max(shape.max_value, v);
    shape.min_value = std::min(shape.min_value, v);
    if (std::abs(v) <= threshold) continue;
    const int sign = v > 0.0 ? 1 : -1;
    if (last_sign == 0) {
      shape.first_sign = sign;
    } else if (sign != last_sign) {
      ++shape.sign_changes;
    }
    last_sign = sign;
  }
  return shape;
}

std::vector<double> transient_absorption(const Trajectory& traj) { return traj.absorption; }

MfeCurve mfe_from(const Trajectory& at_field, const Trajectory& at_reference) {
  if (at_field.size() != at_reference.size()) {
    throw ValidationError("mfe: trajectories have different grids");
  }
  MfeCurve curve;
  curve.times = at_field.times;
  curve.values.resize(at_field.size());
  for (std::size_t i = 0; i < at_field.size(); ++i) {
    curve.values[i] = at_field.absorption[i] - at_reference.absorption[i];
  }
  return curve;
}

MfeCurve mfe(const Scenario& scenario, double field_uT, double reference_uT, Theory theory) {
  if (!scenario.has_field(field_uT) || !scenario.has_field(reference_uT)) {
    throw ValidationError("mfe: fields must belong to scenario '" + scenario.name + "'");
  }
  std::array<Trajectory, 2> runs;
  const std::array<double, 2> fields{field_uT, reference_uT};
  parallel_for(2, [&](std::size_t i) {
    runs[i] = propagate(scenario.spec, scenario.params_for(fields[i], theory));
  });
  return mfe_from(runs[0], runs[1]);
}

std::vector<ScenarioCell> run_scenario(const Scenario& scenario,
                                       const PropagationOptions& options) {
  scenario.validate();
  std::vector<ScenarioCell> cells;
  for (Theory theory : scenario.theories) {
    for (double field : scenario.fields_uT) {
      cells.push_back({field, theory, scenario.params_for(field, theory), {}});
    }
  }
  parallel_for(cells.size(), [&](std::size_t i) {
    cells[i].trajectory = propagate(scenario.spec, cells[i].params, options);
  });
  return cells;
}

std::vector<LabeledMfe> relaxation_sweep(const Scenario& scenario,
                                         const std::vector<double>& kSR_values) {
  scenario.validate();
  struct Cell {
    double kSR;
    Theory theory;
    double field;
    Trajectory traj;
  };
  std::vector<Cell> cells;
  for (double kSR : kSR_values) {
    for (Theory theory : scenario.theories) {
      for (double field : scenario.fields_uT) cells.push_back({kSR, theory, field, {}});
    }
  }
  parallel_for(cells.size(), [&](std::size_t i) {
    SimParams p = scenario.params_for(cells[i].field, cells[i].theory);
    p.kSR = cells[i].kSR;
    cells[i].traj = propagate(scenario.spec, p);
  });

  std::vector<LabeledMfe> out;
  const std::size_t per_theory = scenario.fields_uT.size();
  for (std::size_t base = 0; base < cells.size(); base += per_theory) {
    const Cell& ref = cells[base];
    for (std::size_t j = 1; j < per_theory; ++j) {
      const Cell& c = cells[base + j];
      out.push_back({c.theory, c.kSR, c.field, ref.field, mfe_from(c.traj, ref.traj)});
    }
  }
  return out;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("ZENOCHEM_THREADS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) return static_cast<std::size_t>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::min(worker_count(), count);
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            task(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

SystemSpec single_nucleus_system() {
  Nucleus nucleus;
  nucleus.spin = 0.5;
  nucleus.hyperfine = Eigen::Vector3d(8.0, 2.0, 0.0).asDiagonal();
  nucleus.coupled_electron = 1;
  return SystemSpec{{nucleus}};
}

SimParams low_field_params(Theory theory) {
  SimParams p;
  p.kS = 0.05;
  p.kT = 3.5;
  p.kSR = 0.0;
  p.theory = theory;
  p.t_max = 10.0;
  p.dt = 1e-3;
  return p;
}

const std::vector<Scenario>& builtin_scenarios() {
  static const std::vector<Scenario> scenarios = [] {
    std::vector<Scenario> list;

    Scenario low;
    low.name = "fig2b-lowfield";
    low.description = "low-field MFE at 49 and 39 uT, quantum measurement theory";
    low.spec = single_nucleus_system();
    low.params_base = low_field_params(Theory::quantum);
    low.fields_uT = {0.0, 49.0, 39.0};
    low.theories = {Theory::quantum};
    low.outputs = {OutputKind::mfe};
    list.push_back(low);

    Scenario pheno = low;
    pheno.name = "fig2c-lowfield-phenomenological";
    pheno.description = "low-field MFE at 49 and 39 uT, phenomenological theory";
    pheno.params_base.theory = Theory::phenomenological;
    pheno.theories = {Theory::phenomenological};
    list.push_back(pheno);

    Scenario high;
    high.name = "fig2-highfield";
    high.description = "transient absorption and MFE at 8 mT with creation kinetics";
    high.spec = single_nucleus_system();
    high.params_base = low_field_params(Theory::quantum);
    high.params_base.kCR = 4.0;
    // omega = 112 us^-1 at 8 mT; 1e-3 us steps leave RK4 phase errors that
    // show up as -1e-8 eigenvalues of the decaying phenomenological rho.
    high.params_base.dt = 5e-4;
    high.fields_uT = {0.0, 8000.0};
    high.theories = {Theory::quantum, Theory::phenomenological};
    high.outputs = {OutputKind::transient_absorption, OutputKind::mfe};
    high.field_relaxation_rate = 1.0;
    list.push_back(high);

    Scenario relax;
    relax.name = "fig3-relaxation";
    relax.description = "49 uT MFE under spin relaxation kSR = 0, 1, 10 us^-1";
    relax.spec = single_nucleus_system();
    relax.params_base = low_field_params(Theory::quantum);
    relax.fields_uT = {0.0, 49.0};
    relax.theories = {Theory::quantum, Theory::phenomenological};
    relax.outputs = {OutputKind::mfe};
    relax.sweep_relaxation_rates = {0.0, 1.0, 10.0};
    list.push_back(relax);

    return list;
  }();
  return scenarios;
}

const Scenario& find_scenario(const std::string& name) {
  for (const auto& s : builtin_scenarios()) {
    if (s.name == name) return s;
  }
  throw ConfigError("unknown scenario '" + name + "' (see list-scenarios)");
}

}  // namespace zenochem
