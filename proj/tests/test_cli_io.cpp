#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

#include "zenochem/cli_io.hpp"
#include "zenochem/errors.hpp"

using namespace zenochem;
namespace fs = std::filesystem;

namespace {

const char* kFig2bConfig = R"({
  "system": {"nuclei": [{"spin": 0.5, "hyperfine": [[8,0,0],[0,2,0],[0,0,0]], "coupled_electron": 1}]},
  "params": {"kS": 0.05, "kT": 3.5, "kSR": 0, "kCR": "inf", "B_uT": 49,
             "theory": "quantum", "t_max_us": 2, "dt_us": 0.001, "omega_scale": 1.0},
  "scenario": {"name": "short"},
  "output": {"csv_path": "short.csv", "emit_plot_script": false, "rho_sample_stride": 100}
})";

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("zenochem_test_" + std::to_string(::getpid()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }

  int cli(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli_run(args, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST(Config, ParsesFullDocument) {
  const RunConfig c = parse_config(kFig2bConfig);
  ASSERT_EQ(c.spec.nuclei.size(), 1u);
  EXPECT_EQ(c.spec.nuclei[0].hyperfine(0, 0), 8.0);
  EXPECT_EQ(c.spec.nuclei[0].hyperfine(1, 1), 2.0);
  EXPECT_EQ(c.params.kT, 3.5);
  EXPECT_FALSE(c.params.kCR.has_value());
  EXPECT_EQ(c.params.field_uT, Eigen::Vector3d(0, 0, 49));
  EXPECT_EQ(c.params.theory, Theory::quantum);
  EXPECT_EQ(c.params.t_max, 2.0);
  EXPECT_EQ(c.name, "short");
  EXPECT_EQ(c.output.csv_path, "short.csv");
  EXPECT_EQ(c.output.rho_sample_stride, 100u);
  EXPECT_FALSE(c.builtin_scenario.has_value());
}

TEST(Config, VectorFieldAndFiniteCreationRate) {
  const RunConfig c = parse_config(
      R"({"params": {"B_uT": [1, 2, 3], "kCR": 4, "theory": "phenomenological"}})");
  EXPECT_EQ(c.params.field_uT, Eigen::Vector3d(1, 2, 3));
  EXPECT_EQ(c.params.kCR, 4.0);
  EXPECT_EQ(c.params.theory, Theory::phenomenological);
}

TEST(Config, BuiltinScenarioByName) {
  const RunConfig c = parse_config(R"({"scenario": {"name": "fig2b-lowfield"}})");
  EXPECT_EQ(c.builtin_scenario, "fig2b-lowfield");
  EXPECT_THROW(parse_config(R"({"scenario": {"name": "nope"}})"), ConfigError);
}

TEST(Config, RejectsUnknownKeyByName) {
  try {
    parse_config(R"({"params": {"kS": 0.05, "kTT": 3.5}})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("params.kTT"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config(R"({"sytem": {}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"system": {"nuclei": [{"spin": 0.5, "hyperfine": [[0,0,0],[0,0,0],[0,0,0]], "g": 2}]}})"),
               ConfigError);
}

TEST(Config, RejectsBadTypesAndPhysics) {
  EXPECT_THROW(parse_config("{ not json"), ConfigError);
  EXPECT_THROW(parse_config(R"({"params": {"kS": "fast"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"params": {"kCR": "never"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"params": {"B_uT": [1, 2]}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"params": {"kS": -1}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"params": {"theory": "classical"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"params": {"kT": 80}})"), ConfigError);  // stability guard
  EXPECT_THROW(parse_config(R"({"system": {"nuclei": [{"spin": 0.3, "hyperfine": [[0,0,0],[0,0,0],[0,0,0]]}]}})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"system": {"nuclei": [{"spin": 0.5, "hyperfine": [[0,0],[0,0]]}]}})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"output": {"rho_sample_stride": -3}})"), ConfigError);
}

TEST(Config, MissingFile) {
  EXPECT_THROW(load_config("/nonexistent/zenochem.json"), ConfigError);
}

TEST_F(TempDir, CsvHeaderAndFirstRow) {
  SimParams p = low_field_params(Theory::quantum);
  p.t_max = 0.5;
  const Trajectory traj = propagate(single_nucleus_system(), p);
  const fs::path path = dir_ / "traj.csv";
  write_csv(to_table(traj), path);
  std::ifstream f(path);
  std::string header, first;
  std::getline(f, header);
  std::getline(f, first);
  EXPECT_EQ(header, "time_us,singlet,triplet,trace,population,absorption");
  EXPECT_EQ(first, "0,1,0,1,1,1");

  const CsvTable table = read_csv(path);
  for (std::size_t i = 0; i < table.rows(); ++i) {
    EXPECT_NEAR(table.singlet[i] + table.triplet[i], 1.0, 1e-9);
  }
  EXPECT_EQ(slurp(path).find('\r'), std::string::npos);
}

TEST_F(TempDir, CsvRoundTripIsExact) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> mantissa(-1.0, 1.0);
  std::uniform_int_distribution<int> exponent(-300, 300);
  CsvTable table;
  for (int i = 0; i < 200; ++i) {
    table.time_us.push_back(i * 1e-3);
    for (auto* col : {&table.singlet, &table.triplet, &table.trace, &table.population,
                      &table.absorption}) {
      col->push_back(std::ldexp(mantissa(rng), exponent(rng)));
    }
  }
  table.mfe.emplace();
  for (int i = 0; i < 200; ++i) table.mfe->push_back(std::nextafter(mantissa(rng), 2.0));
  const fs::path path = dir_ / "round.csv";
  write_csv(table, path);
  const CsvTable back = read_csv(path);
  EXPECT_EQ(back.time_us, table.time_us);
  EXPECT_EQ(back.singlet, table.singlet);
  EXPECT_EQ(back.triplet, table.triplet);
  EXPECT_EQ(back.trace, table.trace);
  EXPECT_EQ(back.population, table.population);
  EXPECT_EQ(back.absorption, table.absorption);
  EXPECT_EQ(back.mfe, table.mfe);
}

TEST(Csv, RejectsEmptySeries) { EXPECT_THROW(format_csv(CsvTable{}), ValidationError); }

TEST_F(TempDir, PlotScriptUsesRelativePathsAndOnePanelPerKind) {
  ASSERT_EQ(cli({"mfe", "--scenario", "fig2-highfield", "--out", dir_.string()}), kExitOk)
      << err_.str();
  std::vector<fs::path> csvs;
  for (const auto& e : fs::directory_iterator(dir_)) csvs.push_back(e.path());
  std::sort(csvs.begin(), csvs.end());
  const fs::path script = dir_ / "plot.gp";
  emit_plot_script(csvs, script);
  const std::string text = slurp(script);
  EXPECT_EQ(text.find(dir_.string()), std::string::npos);
  EXPECT_NE(text.find("'absorption_8000uT_quantum.csv'"), std::string::npos);
  EXPECT_NE(text.find("'mfe_8000uT_quantum.csv'"), std::string::npos);
  std::size_t panels = 0;
  for (std::size_t pos = text.find("set title"); pos != std::string::npos;
       pos = text.find("set title", pos + 1)) {
    ++panels;
  }
  EXPECT_EQ(panels, 2u);
  EXPECT_NE(text.find("set multiplot layout 2,1"), std::string::npos);

  if (std::system("command -v gnuplot >/dev/null 2>&1") != 0) {
    GTEST_SKIP() << "gnuplot not installed; script smoke test skipped";
  }
  const std::string cmd = "cd '" + dir_.string() + "' && gnuplot plot.gp >/dev/null 2>&1";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
}

TEST_F(TempDir, ListScenarios) {
  EXPECT_EQ(cli({"list-scenarios"}), kExitOk);
  EXPECT_NE(out_.str().find("fig2b-lowfield"), std::string::npos);
  EXPECT_NE(out_.str().find("fig3-relaxation"), std::string::npos);
}

TEST_F(TempDir, MfeScenarioWritesOneFilePerField) {
  ASSERT_EQ(cli({"mfe", "--scenario", "fig2b-lowfield", "--out", (dir_ / "out").string()}),
            kExitOk)
      << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "out" / "mfe_49uT.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "mfe_39uT.csv"));
  const CsvTable t = read_csv(dir_ / "out" / "mfe_49uT.csv");
  ASSERT_TRUE(t.mfe.has_value());
  EXPECT_EQ(t.rows(), 10001u);
  EXPECT_EQ(t.mfe->front(), 0.0);
}

TEST_F(TempDir, RunWithReferenceEqualToFieldGivesZeroMfe) {
  std::string config = kFig2bConfig;
  config.replace(config.find(R"("name": "short")"), std::string(R"("name": "short")").size(),
                 R"("name": "short", "reference_B_uT": 49)");
  const fs::path cfg = write("run.json", config);
  ASSERT_EQ(cli({"run", "--config", cfg.string(), "--out", dir_.string()}), kExitOk) << err_.str();
  const CsvTable t = read_csv(dir_ / "short.csv");
  ASSERT_TRUE(t.mfe.has_value());
  for (double v : *t.mfe) EXPECT_EQ(v, 0.0);
  EXPECT_NE(out_.str().find("min eigenvalue"), std::string::npos);
}

TEST_F(TempDir, RunIsByteDeterministic) {
  const fs::path cfg = write("run.json", kFig2bConfig);
  ASSERT_EQ(cli({"run", "--config", cfg.string(), "--out", (dir_ / "a").string()}), kExitOk);
  ASSERT_EQ(cli({"run", "--config", cfg.string(), "--out", (dir_ / "b").string()}), kExitOk);
  EXPECT_EQ(slurp(dir_ / "a" / "short.csv"), slurp(dir_ / "b" / "short.csv"));
}

TEST_F(TempDir, RunEmitsPlotScriptWhenAsked) {
  std::string config = kFig2bConfig;
  config.replace(config.find(R"("emit_plot_script": false)"),
                 std::string(R"("emit_plot_script": false)").size(), R"("emit_plot_script": true)");
  const fs::path cfg = write("run.json", config);
  ASSERT_EQ(cli({"run", "--config", cfg.string(), "--out", dir_.string()}), kExitOk) << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "plot.gp"));
}

TEST_F(TempDir, SweepWritesFamily) {
  ASSERT_EQ(cli({"sweep", "--scenario", "fig3-relaxation", "--ksr", "0,10", "--out",
                 dir_.string()}),
            kExitOk)
      << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "sweep_ksr0_quantum_49uT.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "sweep_ksr10_phenomenological_49uT.csv"));
  EXPECT_EQ(cli({"sweep", "--scenario", "fig3-relaxation", "--ksr", "0,x", "--out",
                 dir_.string()}),
            kExitConfigError);
}

TEST_F(TempDir, ConfigErrorsExitWithTwo) {
  EXPECT_EQ(cli({"run", "--config", (dir_ / "missing.json").string()}), kExitConfigError);
  EXPECT_NE(err_.str().find("cannot open"), std::string::npos);

  const fs::path bad = write("bad.json", R"({"params": {"kS": 0.05, "kTT": 1}})");
  EXPECT_EQ(cli({"run", "--config", bad.string(), "--out", dir_.string()}), kExitConfigError);
  EXPECT_NE(err_.str().find("params.kTT"), std::string::npos);

  const fs::path malformed = write("malformed.json", "{");
  EXPECT_EQ(cli({"run", "--config", malformed.string()}), kExitConfigError);

  const fs::path big = write(
      "big.json",
      R"({"system": {"nuclei": [{"spin": 0.5, "hyperfine": [[0,0,0],[0,0,0],[0,0,0]]},
          {"spin": 0.5, "hyperfine": [[0,0,0],[0,0,0],[0,0,0]]}, {"spin": 0.5, "hyperfine": [[0,0,0],[0,0,0],[0,0,0]]},
          {"spin": 0.5, "hyperfine": [[0,0,0],[0,0,0],[0,0,0]]}, {"spin": 0.5, "hyperfine": [[0,0,0],[0,0,0],[0,0,0]]},
          {"spin": 0.5, "hyperfine": [[0,0,0],[0,0,0],[0,0,0]]}, {"spin": 0.5, "hyperfine": [[0,0,0],[0,0,0],[0,0,0]]},
          {"spin": 0.5, "hyperfine": [[0,0,0],[0,0,0],[0,0,0]]}, {"spin": 0.5, "hyperfine": [[0,0,0],[0,0,0],[0,0,0]]},
          {"spin": 0.5, "hyperfine": [[0,0,0],[0,0,0],[0,0,0]]}, {"spin": 0.5, "hyperfine": [[0,0,0],[0,0,0],[0,0,0]]}]}})");
  EXPECT_EQ(cli({"run", "--config", big.string(), "--out", dir_.string()}), kExitConfigError);
  EXPECT_NE(err_.str().find("capacity"), std::string::npos);

  EXPECT_EQ(cli({"mfe", "--scenario", "fig9", "--out", dir_.string()}), kExitConfigError);
  EXPECT_EQ(cli({"frobnicate"}), kExitConfigError);
  EXPECT_EQ(cli({}), kExitConfigError);
}
