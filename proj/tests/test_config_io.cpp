#include "sotlab/config.hpp"
#include "sotlab/experiments.hpp"
#include "sotlab/io.hpp"

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sotlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sotlab_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Config, DefaultsAreValid) {
  // The default cap eps0 * gamma / 2 admits the flagship m = 0.2.
  EXPECT_NO_THROW(ExperimentConfig{}.validate());
}

TEST(Config, ParsesKeys) {
  const ExperimentConfig c = parse_config(
      "# comment\n"
      "gamma = 2.0\n"
      "m_grid = 0.3, 0.1  # trailing comment\n"
      "paths = 200\n"
      "p1 = point:0.5\n"
      "y0_law = matched\n");
  EXPECT_EQ(c.gamma, 2.0);
  EXPECT_EQ(c.m_grid, (std::vector<double>{0.3, 0.1}));
  EXPECT_EQ(c.paths, 200u);
  EXPECT_EQ(c.p1.text, "point:0.5");
  EXPECT_EQ(c.y0_law, "matched");
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("nonsense = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("gamma 1\n"), ConfigError);
  EXPECT_THROW(parse_config("gamma = abc\n"), ConfigError);
  EXPECT_THROW(parse_config("paths = -3\n"), ConfigError);
  EXPECT_THROW(parse_config("m_grid = 0.1, 0.2\n").validate(), ConfigError);
  EXPECT_THROW(parse_config("m_grid = 0.5\n").validate(), ConfigError);
  EXPECT_THROW(parse_config("paths = 50\n").validate(), ConfigError);
  EXPECT_THROW(parse_config("grid = 1000\n").validate(), ConfigError);
  EXPECT_THROW(parse_config("y0_law = other\n").validate(), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/sotlab.cfg"), std::exception);
}

TEST(Config, GaussianMarginalIsQuantileGrid) {
  const EmpiricalMeasure m = MarginalSpec{"gaussian:1:0.25"}.resolve(8);
  ASSERT_EQ(m.size(), 8);
  const boost::math::normal_distribution<double> law(1.0, 0.5);
  for (Eigen::Index i = 0; i < 8; ++i) {
    EXPECT_NEAR(m.point(i)(0), boost::math::quantile(law, (i + 0.5) / 8.0), 1e-14);
    EXPECT_DOUBLE_EQ(m.weight(i), 0.125);
  }
  EXPECT_NEAR(m.mean()(0), 1.0, 1e-14);
}

TEST(Config, PointAndCsvMarginals) {
  const EmpiricalMeasure p = MarginalSpec{"point:0.5:-1"}.resolve(4);
  EXPECT_EQ(p.dim(), 2);
  EXPECT_EQ(p.size(), 1);
  const fs::path dir = scratch("csv");
  fs::create_directories(dir);
  write_measure_csv(p, dir / "m.csv");
  const EmpiricalMeasure q = MarginalSpec{"csv:" + (dir / "m.csv").string()}.resolve(4);
  EXPECT_EQ(q.points(), p.points());
  EXPECT_THROW(MarginalSpec{"uniform:0:1"}.resolve(4), ConfigError);
  EXPECT_THROW(MarginalSpec{"gaussian:0:-1"}.resolve(4), ConfigError);
}

TEST(Config, EntriesRoundTrip) {
  ExperimentConfig c;
  c.gamma = 1.75;
  c.m_grid = {0.15, 0.01};
  std::string text;
  for (const auto& [key, value] : config_entries(c)) text += key + " = " + value + "\n";
  const ExperimentConfig back = parse_config(text);
  EXPECT_EQ(back.gamma, 1.75);
  EXPECT_EQ(back.m_grid, c.m_grid);
  EXPECT_EQ(back.seed, c.seed);
}

TEST(Io, EmitAndReadVerdicts) {
  const fs::path dir = scratch("emit");
  ScenarioReport r;
  r.scenario = "demo";
  r.verdicts.push_back({"X.one", "first", 0.5, 1.0, true});
  r.verdicts.push_back({"X.two", "second", 2.0, 1.0, false});
  r.tables.push_back({"rows", {"a", "b"}, {{1.0, 1.0 / 3.0}}});
  emit(r, dir);
  EXPECT_EQ(slurp(dir / "demo_rows.csv"), "a,b\n1,0.33333333333333331\n");
  const auto back = read_verdicts(dir);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].rule_id, "X.two");
  EXPECT_FALSE(back[1].pass);
  EXPECT_FALSE(r.all_pass());
  EXPECT_NE(format_verdict(back[0]).find("[PASS] X.one"), std::string::npos);
  const auto meta = nlohmann::json::parse(slurp(dir / "demo.jsonl").substr(0, slurp(dir / "demo.jsonl").find('\n')));
  EXPECT_EQ(meta["library_version"], kLibraryVersion);
}

TEST(Io, RaggedTableRejected) {
  const fs::path dir = scratch("ragged");
  fs::create_directories(dir);
  EXPECT_THROW(write_table_csv({"t", {"a", "b"}, {{1.0}}}, dir / "t.csv"), IoError);
}

TEST(Experiments, SampleIndex) {
  Vec w(3);
  w << 0.2, 0.5, 0.3;
  EXPECT_EQ(sample_index(w, 0.1), 0);
  EXPECT_EQ(sample_index(w, 0.2), 1);
  EXPECT_EQ(sample_index(w, 0.69), 1);
  EXPECT_EQ(sample_index(w, 0.9999999), 2);
}

TEST(Experiments, ReproducibleCsvBytes) {
  ExperimentConfig c;
  c.paths = 128;
  c.grid = 64;
  c.support_size = 16;
  const fs::path a = scratch("repro_a"), b = scratch("repro_b");
  emit(run_zero_mass(c), a);
  emit(run_zero_mass(c), b);
  EXPECT_EQ(slurp(a / "zero_mass_rows.csv"), slurp(b / "zero_mass_rows.csv"));
  c.threads = 3;
  const fs::path t = scratch("repro_threads");
  emit(run_zero_mass(c), t);
  EXPECT_EQ(slurp(a / "zero_mass_rows.csv"), slurp(t / "zero_mass_rows.csv"));
}

TEST(Experiments, DegenerateTransportNearNoiseFloor) {
  ExperimentConfig c;
  c.p0 = MarginalSpec{"gaussian:0:0.0001"};
  c.p1 = MarginalSpec{"gaussian:0:0.0001"};
  c.paths = 256;
  c.grid = 128;
  c.support_size = 16;
  const ScenarioReport r = run_zero_mass(c);
  for (const auto& v : r.verdicts)
    if (v.rule_id == "ZM.cost_upper" || v.rule_id == "ZM.terminal_gap") EXPECT_TRUE(v.pass) << v.rule_id;
}

TEST(Experiments, BetaMatchedReproducesBase) {
  ExperimentConfig c;
  c.paths = 128;
  c.grid = 64;
  c.support_size = 16;
  c.y0_law = "matched";
  const ZeroMassSummary base = zero_mass_study(c, false), beta = zero_mass_study(c, true);
  for (std::size_t j = 0; j < base.rows.size(); ++j) {
    EXPECT_NEAR(beta.rows[j].cost_mean, base.rows[j].cost_mean, 1e-9 * base.rows[j].cost_mean);
    EXPECT_NEAR(beta.rows[j].sup_dev_X.back(), base.rows[j].sup_dev_X.back(), 1e-9);
  }
}

TEST(Experiments, ScenarioRegistryClosed) {
  EXPECT_THROW(run_scenario("plugin", ExperimentConfig{}), ConfigError);
}

TEST(Experiments, DeterministicAndAssumptionsPass) {
  EXPECT_TRUE(run_deterministic(ExperimentConfig{}).all_pass());
  EXPECT_TRUE(run_assumptions(ExperimentConfig{}).all_pass());
  EXPECT_TRUE(run_kernels_check(ExperimentConfig{}).all_pass());
}
