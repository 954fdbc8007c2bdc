#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zenochem/experiments.hpp"
#include "zenochem/model.hpp"
#include "zenochem/propagation.hpp"

namespace zenochem {

struct OutputConfig {
  std::string csv_path;  // relative to the --out directory; empty -> <name>.csv
  bool emit_plot_script = false;
  std::size_t rho_sample_stride = 0;
};

struct RunConfig {
  SystemSpec spec;
  SimParams params;
  std::string name = "run";
  // When set, the run also propagates at this field and writes an mfe column.
  std::optional<Eigen::Vector3d> reference_field_uT;
  // Set when the config only names a built-in scenario.
  std::optional<std::string> builtin_scenario;
  OutputConfig output;
};

// Strict parsing: unknown keys, wrong types and invalid physics all throw
// ConfigError naming the offending key.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

// One CSV file: time_us,singlet,triplet,trace,population,absorption[,mfe]
struct CsvTable {
  std::vector<double> time_us;
  std::vector<double> singlet;
  std::vector<double> triplet;
  std::vector<double> trace;
  std::vector<double> population;
  std::vector<double> absorption;
  std::optional<std::vector<double>> mfe;

  std::size_t rows() const { return time_us.size(); }
};

CsvTable to_table(const Trajectory& traj, const MfeCurve* mfe = nullptr);
std::string format_csv(const CsvTable& table);
void write_csv(const CsvTable& table, const std::filesystem::path& path);
CsvTable read_csv(const std::filesystem::path& path);

// Gnuplot script with one panel per output kind found among the CSVs
// (absorption, mfe). CSV paths are written relative to the script's directory.
void emit_plot_script(const std::vector<std::filesystem::path>& csv_paths,
                      const std::filesystem::path& script_path);

// "49" for 49.0, "0.5" for 0.5
std::string format_field(double field_uT);

// Writes every CSV of a built-in scenario into `dir` and returns the paths.
std::vector<std::filesystem::path> write_scenario_outputs(const Scenario& scenario,
                                                          const std::filesystem::path& dir);
std::vector<std::filesystem::path> write_sweep_outputs(const Scenario& scenario,
                                                       const std::vector<double>& kSR_values,
                                                       const std::filesystem::path& dir);

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidationFailure = 1;
inline constexpr int kExitConfigError = 2;

// Subcommands: run, mfe, sweep, validate, list-scenarios. args excludes the
// program name.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zenochem
