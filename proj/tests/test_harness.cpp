#include "crnet/experiments.hpp"

#include <gtest/gtest.h>

#include "crnet/csv.hpp"

namespace crnet {
namespace {

TEST(Config, RoundTripsThroughJson) {
  ExperimentConfig cfg;
  cfg.kind = "separation";
  cfg.seed = 99;
  cfg.budgets = {48, 96};
  cfg.eps = {1, -1, 1};
  cfg.shells = 3;
  cfg.rho_values = {{0.1, 0.2}};
  const nlohmann::json j = cfg;
  const ExperimentConfig back = j.get<ExperimentConfig>();
  EXPECT_EQ(nlohmann::json(back).dump(), j.dump());
  EXPECT_EQ(back.budgets, cfg.budgets);
  EXPECT_EQ(back.eps, cfg.eps);
  EXPECT_EQ(back.seed, cfg.seed);
}

TEST(Config, MissingFieldsFallBackToDefaults) {
  const auto j = nlohmann::json::parse(R"({"kind":"density","seed":5})");
  const ExperimentConfig cfg = j.get<ExperimentConfig>();
  EXPECT_EQ(cfg.kind, "density");
  EXPECT_EQ(cfg.seed, 5u);
  EXPECT_EQ(cfg.budgets, (std::vector<int>{120, 240, 480}));
}

TEST(Csv, SchemaHeaderAndRowWidth) {
  CsvWriter w("demo.v1", {"a", "b"});
  w.cell(1).cell(0.5).end_row();
  const std::string s = w.str();
  EXPECT_EQ(s.rfind("# crnet-csv schema=demo.v1\n", 0), 0u);
  EXPECT_NE(s.find("a,b\n"), std::string::npos);
  EXPECT_NE(s.find("1,0.5\n"), std::string::npos);
  CsvWriter bad("demo.v1", {"a", "b"});
  bad.cell(1);
  EXPECT_THROW(bad.end_row(), std::logic_error);
}

TEST(RunExperiment, UnknownKindThrows) {
  ExperimentConfig cfg;
  cfg.kind = "nonsense";
  EXPECT_THROW(run_experiment(cfg), std::invalid_argument);
}

TEST(Separation, BudgetParityValidation) {
  ExperimentConfig cfg;
  cfg.kind = "separation";
  cfg.budgets = {25};  // not divisible by 8 and 6
  cfg.exp_seeds = 1;
  cfg.train_samples = 10;
  cfg.eval_samples = 10;
  cfg.train_steps = 1;
  EXPECT_THROW(run_separation(cfg), std::invalid_argument);
}

TEST(Separation, ControlRunWithZeroTarget) {
  ExperimentConfig cfg;
  cfg.kind = "separation";
  cfg.seed = 7;
  cfg.shells = 0;  // target identically zero
  cfg.budgets = {24};
  cfg.exp_seeds = 2;
  cfg.train_samples = 2000;
  cfg.eval_samples = 4000;
  cfg.train_steps = 300;
  cfg.out_dir = "/tmp/crnet_test_control";
  const auto rep = run_separation(cfg);
  // Both families fit the zero target essentially exactly.
  const std::string& csv = rep.files.at("separation.csv");
  EXPECT_NE(csv.find("complex"), std::string::npos);
  double worst = 0.0;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // schema
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    const auto last = line.find_last_of(',');
    const auto prev = line.find_last_of(',', last - 1);
    worst = std::max(worst, std::stod(line.substr(prev + 1, last - prev - 1)));
  }
  EXPECT_LT(worst, 5e-3);
}

TEST(Separation, DeterministicFilesAcrossReruns) {
  ExperimentConfig cfg;
  cfg.kind = "separation";
  cfg.seed = 11;
  cfg.budgets = {24};
  cfg.exp_seeds = 2;
  cfg.train_samples = 400;
  cfg.eval_samples = 800;
  cfg.train_steps = 40;
  const auto a = run_separation(cfg);
  const auto b = run_separation(cfg);
  ASSERT_EQ(a.files.size(), b.files.size());
  for (const auto& [name, content] : a.files) {
    EXPECT_EQ(content, b.files.at(name)) << name;
  }
}

TEST(Flow, RunnerChecksPassAndTracesWritten) {
  ExperimentConfig cfg;
  cfg.kind = "flow";
  cfg.seed = 3;
  cfg.steps = 30;
  cfg.widths = {4, 4};
  cfg.flow_samples = 8;
  const auto rep = run_flow(cfg);
  EXPECT_TRUE(rep.ok());
  EXPECT_TRUE(rep.files.count("flow_complex.csv"));
  EXPECT_TRUE(rep.files.count("flow_real.csv"));
  EXPECT_NE(rep.files.at("flow_complex.csv").find("schema=flow_trace.v1"),
            std::string::npos);
}

TEST(Probe, BatteryPasses) {
  ExperimentConfig cfg;
  cfg.kind = "probe";
  cfg.seed = 17;
  const auto rep = run_probe(cfg);
  for (const auto& c : rep.checks) {
    EXPECT_TRUE(c.pass) << c.name << " measured " << c.measured;
  }
}

TEST(Symmetry, LiteCampaignDeterministicAndStable) {
  ExperimentConfig cfg;
  cfg.kind = "symmetry";
  cfg.seed = 23;
  cfg.sym_seeds = 2;
  const auto a = run_symmetry(cfg);
  const auto b = run_symmetry(cfg);
  EXPECT_EQ(a.files.at("symmetry_probe.csv"), b.files.at("symmetry_probe.csv"));
  for (const auto& c : a.checks) {
    EXPECT_TRUE(c.pass) << c.name << " measured " << c.measured;
  }
}

}  // namespace
}  // namespace crnet
