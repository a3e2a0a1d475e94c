// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "graphdf/cli.hpp"
#include "graphdf/io.hpp"
#include "graphdf/panel.hpp"
#include "test_util.hpp"

using namespace graphdf;
using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& p) { return json::parse(io::read_file(p)); }

}  // namespace

TEST(Cli, SynthWritesPanelGraphAndManifest) {
  auto dir = test::scratch_dir("cli_synth");
  ASSERT_EQ(run_command({"synth", "--nodes", "40", "--steps", "200", "--seed", "7", "--out", dir.string()}), kExitOk);
  for (const char* f : {"panel.json", "trace.csv", "graph.csv", "graph.csv.json", "synth.manifest.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  auto panel = load_panel(dir / "panel.json");
  EXPECT_EQ(panel.num_nodes(), 40u);
  EXPECT_EQ(panel.num_steps(), 200u);
  auto manifest = read_json(dir / "synth.manifest.json");
  EXPECT_EQ(manifest.at("command"), "synth");
  EXPECT_EQ(manifest.at("seed"), 7);
  EXPECT_EQ(manifest.at("outputs").size(), 4u);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_command(std::vector<std::string>{}), kExitUsage);
  EXPECT_EQ(run_command({"frobnicate", "--out", "/tmp/x"}), kExitUsage);
  EXPECT_EQ(run_command({"synth"}), kExitUsage);
  EXPECT_EQ(run_command({"synth", "--out", "/tmp/x", "--nodes", "many"}), kExitUsage);
}

TEST(Cli, TrainOnOneStepPanelIsDataError) {
  auto dir = test::scratch_dir("cli_short");
  ASSERT_EQ(run_command({"synth", "--nodes", "4", "--steps", "1", "--out", dir.string()}), kExitOk);
  EXPECT_EQ(run_command({"train", "--panel", (dir / "panel.json").string(), "--graph", (dir / "graph.csv").string(),
                         "--out", (dir / "model").string()}),
            kExitData);
  EXPECT_FALSE(std::filesystem::exists(dir / "model" / "checkpoint.json"));
}

TEST(Cli, MissingInputIsDataError) {
  auto dir = test::scratch_dir("cli_missing");
  EXPECT_EQ(run_command({"build-graph", "--panel", (dir / "nope.json").string(), "--out", dir.string()}), kExitData);
}

TEST(Cli, TrainForecastEvaluatePipeline) {
  auto dir = test::scratch_dir("cli_pipeline");
  const std::string d = dir.string();
  ASSERT_EQ(run_command({"synth", "--nodes", "8", "--steps", "80", "--seed", "3", "--out", d}), kExitOk);
  ASSERT_EQ(run_command({"build-graph", "--panel", d + "/panel.json", "--keep", "topk:3", "--holdout", "5", "--out",
                         d + "/g"}),
            kExitOk);
  ASSERT_EQ(run_command({"train", "--panel", d + "/panel.json", "--graph", d + "/g/graph.csv", "--holdout", "5",
                         "--epochs", "3", "--k", "2", "--q", "4", "--r", "2", "--seed", "3", "--out", d + "/m"}),
            kExitOk);
  auto report = read_json(dir / "m" / "train_report.json");
  EXPECT_EQ(report.at("losses").size(), 3u);
  ASSERT_EQ(run_command({"forecast", "--panel", d + "/panel.json", "--checkpoint", d + "/m/checkpoint.json",
                         "--holdout", "5", "--tau", "5", "--samples", "30", "--seed", "3", "--out", d + "/f"}),
            kExitOk);
  ASSERT_EQ(run_command({"evaluate", "--panel", d + "/panel.json", "--forecast", d + "/f/forecast.json", "--rho", "0.5",
                         "--tau", "3", "--out", d + "/e"}),
            kExitOk);
  auto eval = read_json(dir / "e" / "eval_report.json");
  ASSERT_EQ(eval.at("entries").size(), 1u);
  const auto& entry = eval.at("entries")[0];
  EXPECT_EQ(entry.at("rho"), 0.5);
  EXPECT_EQ(entry.at("tau"), 3);
  const double loss = entry.at("normalized_quantile_loss");
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_GE(loss, 0.0);
  EXPECT_TRUE(std::filesystem::exists(dir / "e" / "eval_nodes.csv"));

  ASSERT_EQ(run_command({"evaluate", "--panel", d + "/panel.json", "--checkpoint", d + "/m/checkpoint.json", "--taus",
                         "1,3", "--test-steps", "5", "--samples", "10", "--out", d + "/b"}),
            kExitOk);
  EXPECT_EQ(read_json(dir / "b" / "eval_report.json").at("entries").size(), 4u);

  auto manifest = read_json(dir / "e" / "evaluate.manifest.json");
  ASSERT_EQ(manifest.at("inputs").size(), 2u);
  EXPECT_EQ(manifest.at("inputs")[0].at("blob"), io::git_blob_hash(io::read_file(dir / "panel.json")));
}

TEST(Cli, ConfigFileSitsBetweenFlagsAndDefaults) {
  auto dir = test::scratch_dir("cli_config");
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"nodes": 6, "steps": 30, "seed": 5})";
  }
  ASSERT_EQ(run_command({"synth", "--config", (dir / "cfg.json").string(), "--steps", "25", "--out", dir.string()}),
            kExitOk);
  auto panel = load_panel(dir / "panel.json");
  EXPECT_EQ(panel.num_nodes(), 6u);
  EXPECT_EQ(panel.num_steps(), 25u);
  EXPECT_EQ(read_json(dir / "synth.manifest.json").at("seed"), 5);

  {
    std::ofstream cfg(dir / "bad.json");
    cfg << R"({"nodes": "six"})";
  }
  EXPECT_EQ(run_command({"synth", "--config", (dir / "bad.json").string(), "--out", dir.string()}), kExitData);
}

TEST(Cli, ScheduleWithOracle) {
  auto dir = test::scratch_dir("cli_schedule");
  const std::string d = dir.string();
  ASSERT_EQ(run_command({"synth", "--nodes", "6", "--steps", "30", "--out", d}), kExitOk);
  ASSERT_EQ(run_command({"schedule", "--panel", d + "/panel.json", "--forecaster", "oracle", "--out", d + "/s"}),
            kExitOk);
  auto summary = read_json(dir / "s" / "schedule_summary.json");
  EXPECT_EQ(summary.at("steps"), 30 - 6 - 3);
  if (summary.at("placements") > 0) EXPECT_EQ(summary.at("metrics").at("cancellation_ratio"), 0.0);
  EXPECT_EQ(run_command({"schedule", "--panel", d + "/panel.json", "--forecaster", "crystal-ball", "--out", d + "/x"}),
            kExitData);
}

TEST(Cli, GradcheckPasses) {
  auto dir = test::scratch_dir("cli_gradcheck");
  EXPECT_EQ(run_command({"gradcheck", "--variant", "rg", "--cell", "dcgru", "--out", dir.string()}), kExitOk);
  EXPECT_TRUE(read_json(dir / "gradcheck.json").at("passed").get<bool>());
}

TEST(Cli, BenchTwoSizes) {
  auto dir = test::scratch_dir("cli_bench");
  ASSERT_EQ(run_command({"bench", "--sizes", "2,4", "--repeats", "3", "--epochs", "20", "--k", "3", "--q", "8",
                         "--r", "3", "--out", dir.string()}),
            kExitOk);
  const std::string csv = io::read_file(dir / "bench.csv");
  EXPECT_EQ(csv.rfind("size,seconds\n", 0), 0u);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  std::vector<double> seconds;
  while (std::getline(lines, line)) seconds.push_back(std::stod(line.substr(line.find(',') + 1)));
  ASSERT_EQ(seconds.size(), 2u);
  EXPECT_LE(seconds[0], seconds[1]);
}
