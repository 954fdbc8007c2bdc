#include "zenochem/validation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

#include "zenochem/cli_io.hpp"
#include "zenochem/experiments.hpp"
#include "zenochem/model.hpp"
#include "zenochem/propagation.hpp"
#include "zenochem/spin_algebra.hpp"

namespace zenochem {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

// Single nucleus, zero hyperfine: H = 0 at B = 0.
SystemSpec decoupled_nucleus() {
  SystemSpec spec = single_nucleus_system();
  spec.nuclei[0].hyperfine.setZero();
  return spec;
}

SimParams fig2b_params(Theory theory) {
  SimParams p = low_field_params(theory);
  p.field_uT = {0.0, 0.0, 49.0};
  return p;
}

CheckResult projector_algebra() {
  Nucleus half;
  Nucleus one;
  one.spin = 1.0;
  const std::vector<std::pair<std::string, SystemSpec>> systems{
      {"0 nuclei", SystemSpec{}},
      {"1 spin-1/2", SystemSpec{{half}}},
      {"1 spin-1", SystemSpec{{one}}},
      {"2 spin-1/2", SystemSpec{{half, half}}},
  };
  double worst = 0.0;
  std::string detail;
  bool ok = true;
  for (const auto& [label, spec] : systems) {
    const SpinOperatorSet ops = build_space(spec);
    const ComplexMatrix& qs = ops.singlet_projector;
    const ComplexMatrix& qt = ops.triplet_projector;
    const ComplexMatrix id = ops.identity();
    const ComplexMatrix zero = ComplexMatrix::Zero(id.rows(), id.cols());
    const double n = static_cast<double>(ops.nuclear_multiplicity);
    const double err = std::max({max_abs_diff(qs * qs, qs), max_abs_diff(qt * qt, qt),
                                 max_abs_diff(qs * qt, zero), max_abs_diff(qt * qs, zero),
                                 max_abs_diff(qs + qt, id), std::abs(qs.trace() - n),
                                 std::abs(qt.trace() - 3.0 * n)});
    worst = std::max(worst, err);
    if (err > 1e-12) {
      ok = false;
      detail += label + " off by " + fmt(err) + "; ";
    }
  }
  return {ok, detail + "max deviation " + fmt(worst) + " (tol 1e-12)"};
}

CheckResult trace_laws() {
  double worst_trace = 0.0;
  for (double kSR : {0.0, 1.0}) {
    SimParams p = fig2b_params(Theory::quantum);
    p.kSR = kSR;
    const Trajectory traj = propagate(single_nucleus_system(), p);
    for (double tr : traj.trace) worst_trace = std::max(worst_trace, std::abs(tr - 1.0));
  }

  SimParams p = fig2b_params(Theory::phenomenological);
  p.kSR = 1.0;
  const Trajectory traj = propagate(single_nucleus_system(), p);
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<std::size_t> pick(2, traj.size() - 3);
  double worst_rel = 0.0;
  for (int sample = 0; sample < 100; ++sample) {
    const std::size_t i = pick(rng);
    const auto& f = traj.trace;
    const double fd = (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * p.dt);
    const double law =
        -2.0 * p.kS * traj.singlet[i] - 2.0 * p.kT * traj.triplet[i] - p.kSR * traj.trace[i];
    worst_rel = std::max(worst_rel, std::abs(fd - law) / std::abs(law));
  }
  const bool ok = worst_trace <= 1e-9 && worst_rel <= 1e-6;
  return {ok, "quantum max|Tr rho - 1| " + fmt(worst_trace) + " (tol 1e-9); trace-law rel err " +
                  fmt(worst_rel) + " (tol 1e-6)"};
}

CheckResult oracle_equivalence() {
  double worst = 0.0;
  const SystemSpec spec = single_nucleus_system();
  for (Theory theory : {Theory::quantum, Theory::phenomenological}) {
    const SimParams p = fig2b_params(theory);
    const Trajectory traj = propagate(spec, p, {1000});
    const ComplexMatrix l = liouvillian_matrix(spec, p);
    const ComplexMatrix rho0 = traj.rho_samples.front();
    for (double t : {1.0, 5.0, 10.0}) {
      const auto index = static_cast<std::size_t>(std::llround(t / p.dt));
      const auto it = std::find(traj.rho_indices.begin(), traj.rho_indices.end(), index);
      const ComplexMatrix& rk4 = traj.rho_samples[it - traj.rho_indices.begin()];
      worst = std::max(worst, max_abs_diff(rk4, propagate_exact(l, rho0, t)));
    }
  }
  return {worst <= 1e-6, "max elementwise |RK4 - exp(Lt)| " + fmt(worst) + " (tol 1e-6)"};
}

CheckResult closed_form_decay() {
  const double expected = std::exp(-0.1 * 10.0);
  double worst = 0.0;
  std::string detail;
  for (Theory theory : {Theory::quantum, Theory::phenomenological}) {
    SimParams p;
    p.kS = 0.05;
    p.theory = theory;
    const Trajectory traj = propagate(decoupled_nucleus(), p);
    const double value = theory == Theory::quantum ? traj.population.back() : traj.trace.back();
    const double rel = std::abs(value - expected) / expected;
    worst = std::max(worst, rel);
    detail += std::string(to_string(theory)) + " rel err " + fmt(rel) + "; ";
  }
  return {worst <= 1e-6, detail + "tol 1e-6"};
}

CheckResult fig2b_reproduction() {
  auto curves = [](const std::string& name) {
    const Scenario& s = find_scenario(name);
    const auto cells = run_scenario(s);
    std::vector<std::pair<double, CurveShape>> shapes;
    for (std::size_t j = 1; j < cells.size(); ++j) {
      shapes.emplace_back(cells[j].field_uT,
                          analyze_curve(mfe_from(cells[j].trajectory, cells[0].trajectory)));
    }
    return shapes;
  };
  const auto quantum = curves("fig2b-lowfield");
  const auto pheno = curves("fig2c-lowfield-phenomenological");
  const CurveShape& q49 = quantum[0].second;
  const CurveShape& q39 = quantum[1].second;
  const bool biphasic = q49.sign_changes >= 1 && q49.first_sign == 1 && q49.min_value < -1e-6;
  const bool ordered = q49.peak_magnitude > q39.peak_magnitude;
  bool pheno_monophasic = true;
  for (const auto& [field, shape] : pheno) pheno_monophasic &= shape.sign_changes == 0;
  std::string detail = "quantum 49uT sign changes " + std::to_string(q49.sign_changes) +
                       ", first sign " + std::to_string(q49.first_sign) + ", peak " +
                       fmt(q49.peak_magnitude) + " vs 39uT peak " + fmt(q39.peak_magnitude) +
                       "; phenomenological sign changes " +
                       std::to_string(pheno[0].second.sign_changes) + "/" +
                       std::to_string(pheno[1].second.sign_changes);
  return {biphasic && ordered && pheno_monophasic, detail};
}

CheckResult fig3_relaxation() {
  const Scenario& s = find_scenario("fig3-relaxation");
  const std::vector<double> rates{0.0, 1.0, 10.0};
  const auto family = relaxation_sweep(s, rates);
  std::vector<CurveShape> quantum, pheno;
  for (const auto& c : family) {
    (c.theory == Theory::quantum ? quantum : pheno).push_back(analyze_curve(c.curve));
  }
  const bool sign_suppressed = quantum[0].sign_changes >= 1 && quantum[2].sign_changes == 0;
  const bool monotone = quantum[0].peak_magnitude >= quantum[1].peak_magnitude &&
                        quantum[1].peak_magnitude >= quantum[2].peak_magnitude;
  const double ratio = quantum[2].peak_magnitude / pheno[2].peak_magnitude;
  const bool similar = ratio >= 0.5 && ratio <= 2.0;
  std::string detail = "quantum sign changes " + std::to_string(quantum[0].sign_changes) + "/" +
                       std::to_string(quantum[1].sign_changes) + "/" +
                       std::to_string(quantum[2].sign_changes) + ", peaks " +
                       fmt(quantum[0].peak_magnitude) + " " + fmt(quantum[1].peak_magnitude) +
                       " " + fmt(quantum[2].peak_magnitude) +
                       "; quantum/phenomenological peak ratio at kSR=10: " + fmt(ratio);
  return {sign_suppressed && monotone && similar, detail};
}

double effective_loss_rate(double kT) {
  SimParams p;
  p.kS = 0.0;
  p.kT = kT;
  p.theory = Theory::quantum;
  const Trajectory traj = propagate(single_nucleus_system(), p);
  return -std::log(traj.population.back()) / p.t_max;
}

CheckResult zeno_suppression() {
  const double slow = effective_loss_rate(4.0);
  const double fast = effective_loss_rate(40.0);
  return {fast < slow, "loss rate r(kT=4) = " + fmt(slow) + " us^-1, r(kT=40) = " + fmt(fast) +
                           " us^-1 (require r(40) < r(4))"};
}

CheckResult high_field_pipeline() {
  const Scenario& s = find_scenario("fig2-highfield");
  const auto cells = run_scenario(s);
  bool negative_start = true;
  std::string detail;
  for (std::size_t base = 0; base < cells.size(); base += 2) {
    const CurveShape shape = analyze_curve(mfe_from(cells[base + 1].trajectory,
                                                    cells[base].trajectory));
    negative_start &= shape.first_sign == -1;
    detail += std::string(to_string(cells[base].theory)) + " first MFE sign " +
              std::to_string(shape.first_sign) + "; ";
  }

  double worst = 0.0;
  for (Theory theory : s.theories) {
    SimParams fast = s.params_for(8000.0, theory);
    fast.kCR = 1e6;
    SimParams instant = fast;
    instant.kCR.reset();
    const Trajectory a = propagate(s.spec, fast);
    const Trajectory b = propagate(s.spec, instant);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a.times[i] < 1e-4) continue;
      worst = std::max(worst, std::abs(a.absorption[i] - b.absorption[i]));
    }
  }
  return {negative_start && worst <= 1e-3,
          detail + "kCR=1e6 vs instantaneous max diff " + fmt(worst) + " (tol 1e-3)"};
}

CheckResult positivity_and_hermiticity() {
  struct Run {
    SystemSpec spec;
    SimParams params;
  };
  std::vector<Run> runs;
  for (const char* name : {"fig2b-lowfield", "fig2c-lowfield-phenomenological", "fig2-highfield"}) {
    const Scenario& s = find_scenario(name);
    for (Theory t : s.theories) {
      for (double f : s.fields_uT) runs.push_back({s.spec, s.params_for(f, t)});
    }
  }
  const Scenario& relax = find_scenario("fig3-relaxation");
  for (double kSR : relax.sweep_relaxation_rates) {
    for (Theory t : relax.theories) {
      for (double f : relax.fields_uT) {
        SimParams p = relax.params_for(f, t);
        p.kSR = kSR;
        runs.push_back({relax.spec, p});
      }
    }
  }
  for (double kT : {4.0, 40.0}) {
    SimParams p;
    p.kT = kT;
    runs.push_back({single_nucleus_system(), p});
  }
  for (Theory t : {Theory::quantum, Theory::phenomenological}) {
    SimParams p;
    p.kS = 0.05;
    p.theory = t;
    runs.push_back({decoupled_nucleus(), p});
  }

  std::vector<double> min_eig(runs.size()), defect(runs.size());
  parallel_for(runs.size(), [&](std::size_t i) {
    const Trajectory traj = propagate(runs[i].spec, runs[i].params, {10});
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& rho : traj.rho_samples) {
      lo = std::min(lo, min_eigenvalue(rho));
      hi = std::max(hi, hermiticity_defect(rho));
    }
    min_eig[i] = lo;
    defect[i] = hi;
  });
  const double lo = *std::min_element(min_eig.begin(), min_eig.end());
  const double hi = *std::max_element(defect.begin(), defect.end());
  return {lo >= -1e-8 && hi <= 1e-10, std::to_string(runs.size()) + " runs: min eigenvalue " +
                                          fmt(lo) + " (tol -1e-8), max |rho - rho^dag| " +
                                          fmt(hi) + " (tol 1e-10)"};
}

std::string slurp(const fs::path& path) {
  std::ifstream file(path, std::ios::binary);
  std::stringstream ss;
  ss << file.rdbuf();
  return ss.str();
}

CheckResult determinism() {
  const fs::path root = fs::temp_directory_path() /
                        ("zenochem_determinism_" + std::to_string(::getpid()));
  std::size_t compared = 0;
  bool ok = true;
  std::string detail;
  std::ostringstream sink;
  for (const auto& s : builtin_scenarios()) {
    std::vector<std::string> cmd =
        s.sweep_relaxation_rates.empty()
            ? std::vector<std::string>{"mfe", "--scenario", s.name, "--out"}
            : std::vector<std::string>{"sweep", "--scenario", s.name, "--out"};
    const fs::path a = root / (s.name + "_a");
    const fs::path b = root / (s.name + "_b");
    auto cmd_a = cmd, cmd_b = cmd;
    cmd_a.push_back(a.string());
    cmd_b.push_back(b.string());
    if (cli_run(cmd_a, sink, sink) != kExitOk || cli_run(cmd_b, sink, sink) != kExitOk) {
      ok = false;
      detail += s.name + " failed to run; ";
      continue;
    }
    for (const auto& entry : fs::directory_iterator(a)) {
      const fs::path other = b / entry.path().filename();
      ++compared;
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
        ok = false;
        detail += entry.path().filename().string() + " differs; ";
      }
    }
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  return {ok && compared > 0, detail + std::to_string(compared) + " CSV pairs byte-compared"};
}

}  // namespace

std::vector<AcceptanceCheck> acceptance_checks() {
  return {
      {1, "projector algebra", projector_algebra},
      {2, "trace laws", trace_laws},
      {3, "RK4 vs Liouvillian exponential", oracle_equivalence},
      {4, "closed-form decay", closed_form_decay},
      {5, "low-field MFE shape (49/39 uT)", fig2b_reproduction},
      {6, "relaxation suppression", fig3_relaxation},
      {7, "Zeno suppression of loss rate", zeno_suppression},
      {8, "high-field pipeline", high_field_pipeline},
      {9, "positivity and Hermiticity", positivity_and_hermiticity},
      {10, "CLI determinism", determinism},
  };
}

}  // namespace zenochem
