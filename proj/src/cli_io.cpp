#include "zenochem/cli_io.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "zenochem/errors.hpp"
#include "zenochem/validation.hpp"

namespace zenochem {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown_keys(const json& object, const std::set<std::string>& allowed,
                         const std::string& section) {
  if (!object.is_object()) throw ConfigError("'" + section + "' must be an object");
  for (const auto& [key, value] : object.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + section + "." + key + "'");
  }
}

double read_number(const json& object, const std::string& key, const std::string& section,
                   double fallback) {
  if (!object.contains(key)) return fallback;
  const auto& v = object.at(key);
  if (!v.is_number()) throw ConfigError("'" + section + "." + key + "' must be a number");
  return v.get<double>();
}

Eigen::Vector3d read_field(const json& v, const std::string& where) {
  if (v.is_number()) return {0.0, 0.0, v.get<double>()};
  if (v.is_array() && v.size() == 3 &&
      std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); })) {
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  }
  throw ConfigError("'" + where + "' must be a number (z field) or a 3-vector");
}

Nucleus read_nucleus(const json& node, std::size_t index) {
  const std::string where = "system.nuclei[" + std::to_string(index) + "]";
  reject_unknown_keys(node, {"spin", "hyperfine", "coupled_electron"}, where);
  if (!node.contains("spin") || !node.contains("hyperfine")) {
    throw ConfigError("'" + where + "' requires 'spin' and 'hyperfine'");
  }
  Nucleus nucleus;
  nucleus.spin = read_number(node, "spin", where, 0.5);
  const auto& rows = node.at("hyperfine");
  if (!rows.is_array() || rows.size() != 3) {
    throw ConfigError("'" + where + ".hyperfine' must be 3 rows of 3 numbers");
  }
  for (int r = 0; r < 3; ++r) {
    const auto& row = rows[r];
    if (!row.is_array() || row.size() != 3) {
      throw ConfigError("'" + where + ".hyperfine' must be 3 rows of 3 numbers");
    }
    for (int c = 0; c < 3; ++c) {
      if (!row[c].is_number()) throw ConfigError("'" + where + ".hyperfine' has a non-number");
      nucleus.hyperfine(r, c) = row[c].get<double>();
    }
  }
  if (node.contains("coupled_electron")) {
    const auto& e = node.at("coupled_electron");
    if (!e.is_number_integer()) throw ConfigError("'" + where + ".coupled_electron' must be 1 or 2");
    nucleus.coupled_electron = e.get<int>();
  }
  return nucleus;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open '" + path.string() + "' for writing");
  file << text;
  if (!file) throw Error("write to '" + path.string() + "' failed");
}

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size()) {
      throw ConfigError("malformed number '" + item + "' in list '" + text + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) throw ConfigError("empty list");
  return values;
}

std::string scenario_file_suffix(const Scenario& scenario, Theory theory) {
  return scenario.theories.size() > 1 ? "_" + std::string(to_string(theory)) : "";
}

void report_density_diagnostics(const Trajectory& traj, std::ostream& out) {
  if (traj.rho_samples.empty()) return;
  double min_eig = std::numeric_limits<double>::infinity();
  double max_defect = 0.0;
  for (const auto& rho : traj.rho_samples) {
    min_eig = std::min(min_eig, min_eigenvalue(rho));
    max_defect = std::max(max_defect, hermiticity_defect(rho));
  }
  out << "sampled " << traj.rho_samples.size() << " density matrices: min eigenvalue "
      << min_eig << ", max |rho - rho^dag| " << max_defect << "\n";
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  reject_unknown_keys(doc, {"system", "params", "scenario", "output"}, "<root>");

  RunConfig config;
  if (doc.contains("scenario")) {
    const auto& sc = doc.at("scenario");
    reject_unknown_keys(sc, {"name", "reference_B_uT"}, "scenario");
    if (sc.contains("name")) {
      if (!sc.at("name").is_string()) throw ConfigError("'scenario.name' must be a string");
      config.name = sc.at("name").get<std::string>();
    }
    if (sc.contains("reference_B_uT")) {
      config.reference_field_uT = read_field(sc.at("reference_B_uT"), "scenario.reference_B_uT");
    }
  }

  const bool inline_run = doc.contains("system") || doc.contains("params");
  if (!inline_run) {
    if (!doc.contains("scenario")) {
      throw ConfigError("config needs 'system'/'params' or a built-in 'scenario.name'");
    }
    find_scenario(config.name);  // throws ConfigError when unknown
    config.builtin_scenario = config.name;
  }

  if (doc.contains("system")) {
    const auto& sys = doc.at("system");
    reject_unknown_keys(sys, {"nuclei"}, "system");
    if (sys.contains("nuclei")) {
      const auto& list = sys.at("nuclei");
      if (!list.is_array()) throw ConfigError("'system.nuclei' must be a list");
      for (std::size_t i = 0; i < list.size(); ++i) {
        config.spec.nuclei.push_back(read_nucleus(list[i], i));
      }
    }
  }

  if (doc.contains("params")) {
    const auto& p = doc.at("params");
    reject_unknown_keys(p, {"kS", "kT", "kSR", "kCR", "B_uT", "theory", "t_max_us", "dt_us",
                            "omega_scale"},
                        "params");
    SimParams& sp = config.params;
    sp.kS = read_number(p, "kS", "params", sp.kS);
    sp.kT = read_number(p, "kT", "params", sp.kT);
    sp.kSR = read_number(p, "kSR", "params", sp.kSR);
    if (p.contains("kCR")) {
      const auto& k = p.at("kCR");
      if (k.is_string() && k.get<std::string>() == "inf") {
        sp.kCR.reset();
      } else if (k.is_number()) {
        sp.kCR = k.get<double>();
      } else {
        throw ConfigError("'params.kCR' must be a number or \"inf\"");
      }
    }
    if (p.contains("B_uT")) sp.field_uT = read_field(p.at("B_uT"), "params.B_uT");
    if (p.contains("theory")) {
      if (!p.at("theory").is_string()) throw ConfigError("'params.theory' must be a string");
      try {
        sp.theory = parse_theory(p.at("theory").get<std::string>());
      } catch (const ValidationError& e) {
        throw ConfigError(std::string("'params.theory': ") + e.what());
      }
    }
    sp.t_max = read_number(p, "t_max_us", "params", sp.t_max);
    sp.dt = read_number(p, "dt_us", "params", sp.dt);
    sp.omega_scale = read_number(p, "omega_scale", "params", sp.omega_scale);
  }

  if (doc.contains("output")) {
    const auto& o = doc.at("output");
    reject_unknown_keys(o, {"csv_path", "emit_plot_script", "rho_sample_stride"}, "output");
    if (o.contains("csv_path")) {
      if (!o.at("csv_path").is_string()) throw ConfigError("'output.csv_path' must be a string");
      config.output.csv_path = o.at("csv_path").get<std::string>();
    }
    if (o.contains("emit_plot_script")) {
      if (!o.at("emit_plot_script").is_boolean()) {
        throw ConfigError("'output.emit_plot_script' must be true or false");
      }
      config.output.emit_plot_script = o.at("emit_plot_script").get<bool>();
    }
    if (o.contains("rho_sample_stride")) {
      const auto& s = o.at("rho_sample_stride");
      if (!s.is_number_unsigned()) {
        throw ConfigError("'output.rho_sample_stride' must be a non-negative integer");
      }
      config.output.rho_sample_stride = s.get<std::size_t>();
    }
  }

  if (inline_run) {
    try {
      config.spec.validate();
      config.params.validate();
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("invalid physics: ") + e.what());
    }
  }
  return config;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << file.rdbuf();
  return parse_config(buffer.str());
}

CsvTable to_table(const Trajectory& traj, const MfeCurve* mfe) {
  CsvTable table{traj.times, traj.singlet, traj.triplet, traj.trace, traj.population,
                 transient_absorption(traj), std::nullopt};
  if (mfe) {
    if (mfe->values.size() != traj.size()) throw ValidationError("mfe curve length mismatch");
    table.mfe = mfe->values;
  }
  return table;
}

std::string format_csv(const CsvTable& table) {
  if (table.rows() == 0) throw ValidationError("write_csv: empty series");
  std::string out = "time_us,singlet,triplet,trace,population,absorption";
  if (table.mfe) out += ",mfe";
  out += '\n';
  for (std::size_t i = 0; i < table.rows(); ++i) {
    out += format_double(table.time_us[i]);
    for (const auto* column : {&table.singlet, &table.triplet, &table.trace,
                               &table.population, &table.absorption}) {
      out += ',';
      out += format_double((*column)[i]);
    }
    if (table.mfe) {
      out += ',';
      out += format_double((*table.mfe)[i]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const CsvTable& table, const fs::path& path) {
  write_text(path, format_csv(table));
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(file, line)) throw Error("'" + path.string() + "' is empty");
  CsvTable table;
  if (line == "time_us,singlet,triplet,trace,population,absorption,mfe") {
    table.mfe.emplace();
  } else if (line != "time_us,singlet,triplet,trace,population,absorption") {
    throw Error("'" + path.string() + "' has an unexpected header");
  }
  const std::size_t columns = table.mfe ? 7 : 6;
  std::vector<std::vector<double>*> targets{&table.time_us, &table.singlet,   &table.triplet,
                                            &table.trace,   &table.population, &table.absorption};
  if (table.mfe) targets.push_back(&*table.mfe);
  while (std::getline(file, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= columns) throw Error("too many columns in '" + path.string() + "'");
      targets[c++]->push_back(std::strtod(cell.c_str(), nullptr));
    }
    if (c != columns) throw Error("short row in '" + path.string() + "'");
  }
  return table;
}

void emit_plot_script(const std::vector<fs::path>& csv_paths, const fs::path& script_path) {
  const fs::path base = script_path.has_parent_path() ? script_path.parent_path() : fs::path(".");
  std::vector<std::string> absorption, mfe;
  for (const auto& csv : csv_paths) {
    const CsvTable table = read_csv(csv);
    const std::string rel = fs::relative(fs::absolute(csv), fs::absolute(base)).generic_string();
    (table.mfe ? mfe : absorption).push_back(rel);
  }

  std::ostringstream gp;
  gp << "# gnuplot script; run from this directory: gnuplot " << script_path.filename().string()
     << "\n";
  gp << "set datafile separator ','\n";
  const std::size_t panels =
      std::max<std::size_t>(1, std::size_t{!absorption.empty()} + std::size_t{!mfe.empty()});
  gp << "set terminal svg size 900," << 380 * panels << "\n";
  gp << "set output '" << script_path.stem().string() << ".svg'\n";
  gp << "set multiplot layout " << panels << ",1\n";
  gp << "set xlabel 'time (us)'\n";
  gp << "set key outside right\n";
  auto panel = [&](const std::vector<std::string>& files, int column, const char* title,
                   const char* ylabel) {
    if (files.empty()) return;
    gp << "set title '" << title << "'\n";
    gp << "set ylabel '" << ylabel << "'\n";
    gp << "plot ";
    for (std::size_t i = 0; i < files.size(); ++i) {
      if (i) gp << ", \\\n     ";
      gp << "'" << files[i] << "' using 1:" << column << " every ::1 with lines title '"
         << fs::path(files[i]).stem().string() << "'";
    }
    gp << "\n";
  };
  panel(absorption, 6, "transient absorption", "surviving pairs");
  panel(mfe, 7, "magnetic field effect", "MFE");
  gp << "unset multiplot\n";
  write_text(script_path, gp.str());
}

std::string format_field(double field_uT) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.10g", field_uT);
  return buffer;
}

std::vector<fs::path> write_scenario_outputs(const Scenario& scenario, const fs::path& dir) {
  const auto cells = run_scenario(scenario);
  std::vector<fs::path> written;
  const std::size_t per_theory = scenario.fields_uT.size();
  for (std::size_t base = 0; base < cells.size(); base += per_theory) {
    const ScenarioCell& ref = cells[base];
    const std::string suffix = scenario_file_suffix(scenario, ref.theory);
    for (std::size_t j = 0; j < per_theory; ++j) {
      const ScenarioCell& cell = cells[base + j];
      if (scenario.has_output(OutputKind::transient_absorption)) {
        const fs::path path =
            dir / ("absorption_" + format_field(cell.field_uT) + "uT" + suffix + ".csv");
        write_csv(to_table(cell.trajectory), path);
        written.push_back(path);
      }
      if (j > 0 && scenario.has_output(OutputKind::mfe)) {
        const MfeCurve curve = mfe_from(cell.trajectory, ref.trajectory);
        const fs::path path = dir / ("mfe_" + format_field(cell.field_uT) + "uT" + suffix + ".csv");
        write_csv(to_table(cell.trajectory, &curve), path);
        written.push_back(path);
      }
    }
  }
  return written;
}

std::vector<fs::path> write_sweep_outputs(const Scenario& scenario,
                                          const std::vector<double>& kSR_values,
                                          const fs::path& dir) {
  // Re-run cells so the CSV carries the full trajectory at the field, not only
  // the MFE difference.
  std::vector<fs::path> written;
  struct Job {
    double kSR;
    Theory theory;
  };
  std::vector<Job> jobs;
  for (double k : kSR_values) {
    for (Theory t : scenario.theories) jobs.push_back({k, t});
  }
  std::vector<std::vector<std::pair<fs::path, CsvTable>>> results(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    Scenario s = scenario;
    s.params_base.kSR = jobs[i].kSR;
    s.field_relaxation_rate.reset();
    s.theories = {jobs[i].theory};
    const Trajectory ref = propagate(s.spec, s.params_for(s.reference_field(), jobs[i].theory));
    for (std::size_t j = 1; j < s.fields_uT.size(); ++j) {
      const Trajectory at = propagate(s.spec, s.params_for(s.fields_uT[j], jobs[i].theory));
      const MfeCurve curve = mfe_from(at, ref);
      const fs::path path = dir / ("sweep_ksr" + format_field(jobs[i].kSR) + "_" +
                                   std::string(to_string(jobs[i].theory)) + "_" +
                                   format_field(s.fields_uT[j]) + "uT.csv");
      results[i].emplace_back(path, to_table(at, &curve));
    }
  });
  for (const auto& batch : results) {
    for (const auto& [path, table] : batch) {
      write_csv(table, path);
      written.push_back(path);
    }
  }
  return written;
}

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"zenochem: radical-ion-pair spin dynamics under phenomenological and "
               "quantum-measurement master equations"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", scenario_name, ksr_list;
  auto* run = app.add_subcommand("run", "propagate one configuration file");
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--out", out_dir, "output directory");

  auto* mfe_cmd = app.add_subcommand("mfe", "run a built-in scenario and write its CSVs");
  mfe_cmd->add_option("--scenario", scenario_name, "built-in scenario name")->required();
  mfe_cmd->add_option("--out", out_dir, "output directory");
  bool plot = false;
  mfe_cmd->add_flag("--plot", plot, "also write plot.gp");

  auto* sweep = app.add_subcommand("sweep", "relaxation-rate family of MFE curves");
  sweep->add_option("--scenario", scenario_name, "built-in scenario name")->required();
  sweep->add_option("--ksr", ksr_list, "comma-separated kSR values in us^-1");
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_flag("--plot", plot, "also write plot.gp");

  auto* validate = app.add_subcommand("validate", "run the invariant and oracle suite");
  auto* list = app.add_subcommand("list-scenarios", "print the built-in scenarios");

  std::vector<const char*> argv{"zenochem"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    const fs::path dir(out_dir);
    if (*list) {
      for (const auto& s : builtin_scenarios()) out << s.name << "\t" << s.description << "\n";
      return kExitOk;
    }
    if (*validate) {
      bool all_passed = true;
      for (const auto& check : acceptance_checks()) {
        const CheckResult r = check.run();
        all_passed = all_passed && r.passed;
        out << (r.passed ? "PASS" : "FAIL") << " [" << check.id << "] " << check.name << ": "
            << r.detail << "\n";
      }
      return all_passed ? kExitOk : kExitValidationFailure;
    }
    if (*mfe_cmd) {
      const Scenario& scenario = find_scenario(scenario_name);
      const auto paths = write_scenario_outputs(scenario, dir);
      for (const auto& p : paths) out << "wrote " << p.string() << "\n";
      if (plot) emit_plot_script(paths, dir / "plot.gp");
      return kExitOk;
    }
    if (*sweep) {
      const Scenario& scenario = find_scenario(scenario_name);
      const std::vector<double> ksr =
          ksr_list.empty() ? scenario.sweep_relaxation_rates : parse_list(ksr_list);
      if (ksr.empty()) throw ConfigError("scenario has no default kSR family; pass --ksr");
      for (double k : ksr) {
        if (!(std::isfinite(k) && k >= 0.0)) throw ConfigError("kSR values must be >= 0");
      }
      const auto paths = write_sweep_outputs(scenario, ksr, dir);
      for (const auto& p : paths) out << "wrote " << p.string() << "\n";
      if (plot) emit_plot_script(paths, dir / "plot.gp");
      return kExitOk;
    }
    if (*run) {
      const RunConfig config = load_config(config_path);
      std::vector<fs::path> paths;
      if (config.builtin_scenario) {
        paths = write_scenario_outputs(find_scenario(*config.builtin_scenario), dir);
      } else {
        const PropagationOptions options{config.output.rho_sample_stride};
        const Trajectory traj = propagate(config.spec, config.params, options);
        const fs::path path =
            dir / (config.output.csv_path.empty() ? config.name + ".csv" : config.output.csv_path);
        if (config.reference_field_uT) {
          SimParams ref_params = config.params;
          ref_params.field_uT = *config.reference_field_uT;
          const Trajectory ref = propagate(config.spec, ref_params);
          const MfeCurve curve = mfe_from(traj, ref);
          write_csv(to_table(traj, &curve), path);
        } else {
          write_csv(to_table(traj), path);
        }
        report_density_diagnostics(traj, out);
        paths.push_back(path);
      }
      for (const auto& p : paths) out << "wrote " << p.string() << "\n";
      if (config.output.emit_plot_script) emit_plot_script(paths, dir / "plot.gp");
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const CapacityError& e) {
    err << "capacity error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const IntegrationError& e) {
    err << "integration error: " << e.what() << "\n";
    return kExitValidationFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidationFailure;
  }
  return kExitOk;
}

}  // namespace zenochem
