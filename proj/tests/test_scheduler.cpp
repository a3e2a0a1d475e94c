// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <chrono>
#include <random>
#include <thread>

#include "graphdf/error.hpp"
#include "graphdf/scheduler.hpp"
#include "test_util.hpp"

using namespace graphdf;

namespace {

TimeSeriesPanel trace_from(const Eigen::MatrixXd& usage) {
  TimeSeriesPanel p;
  for (Eigen::Index i = 0; i < usage.rows(); ++i) p.node_ids.push_back("m" + std::to_string(i));
  p.targets = usage;
  for (Eigen::Index t = 0; t < usage.cols(); ++t) p.timestamps.push_back(300 * t);
  p.covariates = replicate_covariates(make_time_covariates(p.timestamps, 1), static_cast<std::size_t>(usage.rows()));
  return p;
}

// Truth plus a fixed per-node bias; never refits.
class BiasedForecaster final : public Forecaster {
 public:
  BiasedForecaster(TimeSeriesPanel truth, Eigen::VectorXd bias) : truth_(std::move(truth)), bias_(std::move(bias)) {}
  std::string name() const override { return "biased"; }
  Eigen::MatrixXd forecast(const TimeSeriesPanel&, std::size_t step, std::size_t tau, bool) override {
    Eigen::MatrixXd f = truth_.targets.middleCols(static_cast<Eigen::Index>(step + 1), static_cast<Eigen::Index>(tau));
    f.colwise() += bias_;
    return f;
  }

 private:
  TimeSeriesPanel truth_;
  Eigen::VectorXd bias_;
};

class FlakyForecaster final : public Forecaster {
 public:
  explicit FlakyForecaster(std::size_t nodes) : nodes_(nodes) {}
  std::string name() const override { return "flaky"; }
  Eigen::MatrixXd forecast(const TimeSeriesPanel&, std::size_t step, std::size_t tau, bool) override {
    if (step % 2 == 1) fail(ErrorKind::NumericOverflow, "injected failure");
    return Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(nodes_), static_cast<Eigen::Index>(tau), 0.1);
  }

 private:
  std::size_t nodes_;
};

class SlowForecaster final : public Forecaster {
 public:
  std::string name() const override { return "slow"; }
  Eigen::MatrixXd forecast(const TimeSeriesPanel& history, std::size_t, std::size_t tau, bool) override {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    return Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(history.num_nodes()), static_cast<Eigen::Index>(tau), 0.5);
  }
};

Eigen::MatrixXd random_usage(std::size_t nodes, std::size_t steps, std::mt19937_64& rng) {
  return (test::random_matrix(nodes, steps, rng).array() * 0.5 + 0.5).matrix();
}

}  // namespace

TEST(Scheduler, OracleOnIdleMachineAccumulatesLambdaTimesFreeShare) {
  Eigen::MatrixXd usage(3, 12);
  usage.row(0).setConstant(0.2);
  usage.row(1).setConstant(0.9);
  usage.row(2).setConstant(0.7);
  auto panel = trace_from(usage);
  OracleForecaster oracle(panel);
  SchedulerConfig cfg;
  auto report = run_schedule_sim(oracle, panel, cfg);
  ASSERT_EQ(report.steps.size(), 3u);  // t = 6, 7, 8
  EXPECT_EQ(report.placements, 3u);
  // The forecast mean of a three-step window of 0.2 is (0.2 + 0.2 + 0.2) / 3.
  const double window_mean = (0.2 + 0.2 + 0.2) / 3.0;
  double expected = 0.0;
  for (int k = 0; k < 3; ++k) expected += 0.75 * (1.0 - window_mean);
  EXPECT_EQ(report.acc, expected);
  EXPECT_NEAR(0.75 * (1.0 - 0.2), 0.6, 1e-15);
  for (const auto& r : report.records) EXPECT_EQ(r.decision == Decision::skipped, r.node != 0);
}

TEST(Scheduler, FullyLoadedTraceNeverPlaces) {
  auto panel = trace_from(Eigen::MatrixXd::Ones(4, 20));
  OracleForecaster oracle(panel);
  auto report = run_schedule_sim(oracle, panel, SchedulerConfig{});
  EXPECT_EQ(report.placements, 0u);
  EXPECT_EQ(report.acc, 0.0);
  auto m = schedule_metrics(report, baseline_utilization(panel, report));
  EXPECT_FALSE(m.correct_ratio.has_value());
  EXPECT_FALSE(m.cancellation_ratio.has_value());
  EXPECT_TRUE(m.to_json().at("correct_ratio").is_null());
  EXPECT_EQ(m.utilization_improvement, 0.0);
  EXPECT_DOUBLE_EQ(m.baseline_utilization, 100.0);
}

TEST(Scheduler, OracleIsAlwaysCorrectAndNeverCancelled) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    auto panel = trace_from(random_usage(6, 30, rng));
    OracleForecaster oracle(panel);
    auto report = run_schedule_sim(oracle, panel, SchedulerConfig{});
    auto m = schedule_metrics(report, baseline_utilization(panel, report));
    if (report.placements == 0) continue;
    EXPECT_EQ(*m.correct_ratio, 1.0);
    EXPECT_EQ(*m.cancellation_ratio, 0.0);
    EXPECT_EQ(report.cancelled, 0u);
  }
}

TEST(Scheduler, CountsAreConsistent) {
  std::mt19937_64 rng(2);
  auto panel = trace_from(random_usage(8, 40, rng));
  Eigen::VectorXd bias = test::random_matrix(8, 1, rng, 0.3);
  BiasedForecaster f(panel, bias);
  auto report = run_schedule_sim(f, panel, SchedulerConfig{});
  ASSERT_GT(report.placements, 0u);
  EXPECT_EQ(report.correct + report.incorrect, report.placements);
  auto m = schedule_metrics(report, baseline_utilization(panel, report));
  EXPECT_EQ(*m.correct_ratio + static_cast<double>(report.incorrect) / static_cast<double>(report.placements), 1.0);
  EXPECT_EQ(m.placements, report.placements);
  std::size_t cancelled = 0;
  double acc = 0.0;
  for (const auto& r : report.records)
    if (r.decision != Decision::skipped) {
      acc += 0.75 * (1.0 - r.forecast_mean);
      if (r.decision == Decision::cancelled) {
        ++cancelled;
        EXPECT_GT(r.actual_mean, 1.0 - 0.75 * (1.0 - 0.25));
      }
    }
  EXPECT_EQ(cancelled, report.cancelled);
  EXPECT_EQ(acc, report.acc);
  EXPECT_GE(report.acc, 0.0);
}

TEST(Scheduler, LoweringEpsilonNeverAddsPlacements) {
  std::mt19937_64 rng(3);
  auto panel = trace_from(random_usage(10, 40, rng));
  BiasedForecaster f(panel, test::random_matrix(10, 1, rng, 0.2));
  std::size_t previous = std::numeric_limits<std::size_t>::max();
  for (double eps : {0.9, 0.7, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05}) {
    SchedulerConfig cfg;
    cfg.epsilon = eps;
    auto report = run_schedule_sim(f, panel, cfg);
    EXPECT_LE(report.placements, previous) << eps;
    previous = report.placements;
  }
}

TEST(ScheduleMetrics, ConstructedLogOfThirtyFivePlacements) {
  ScheduleReport report;
  report.num_nodes = 7;
  report.steps = {0, 1, 2, 3, 4};
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t i = 0; i < 7; ++i) {
      PlacementRecord r;
      r.step = t;
      r.node = i;
      r.forecast_mean = 0.1;
      const bool cancel = (t * 7 + i) % 5 == 0;  // 7 of 35
      r.decision = cancel ? Decision::cancelled : Decision::scheduled;
      r.actual_mean = cancel ? 0.9 : 0.1;
      report.records.push_back(r);
    }
  auto m = schedule_metrics(report, std::vector<double>(5, 0.3));
  EXPECT_EQ(m.placements, 35u);
  EXPECT_DOUBLE_EQ(*m.cancellation_ratio, 0.2);
  EXPECT_DOUBLE_EQ(*m.correct_ratio, 0.8);
  EXPECT_DOUBLE_EQ(m.baseline_utilization, 30.0);
  // 28 surviving placements of 0.75 * 0.9 over 5 steps x 7 nodes.
  EXPECT_NEAR(m.utilization_improvement, 100.0 * 28 * 0.675 / 35.0, 1e-12);
}

TEST(ScheduleMetrics, AllCorrectNoneCancelled) {
  ScheduleReport report;
  report.num_nodes = 2;
  report.steps = {0};
  report.records = {{0, 0, Decision::scheduled, 0.1, 0.2}, {0, 1, Decision::skipped, 0.8, 0.8}};
  auto m = schedule_metrics(report, {0.5});
  EXPECT_EQ(*m.correct_ratio, 1.0);
  EXPECT_EQ(*m.cancellation_ratio, 0.0);
}

TEST(ScheduleMetrics, IdempotentOnTheSameLog) {
  std::mt19937_64 rng(4);
  auto panel = trace_from(random_usage(5, 30, rng));
  BiasedForecaster f(panel, test::random_matrix(5, 1, rng, 0.2));
  auto report = run_schedule_sim(f, panel, SchedulerConfig{});
  auto base = baseline_utilization(panel, report);
  auto a = schedule_metrics(report, base).to_json().dump();
  auto b = schedule_metrics(report, base).to_json().dump();
  EXPECT_EQ(a, b);
  EXPECT_THROW(schedule_metrics(report, {}), Error);
}

TEST(Scheduler, WithdrawalsCountForecastsThatTurnHigh) {
  Eigen::MatrixXd usage = Eigen::MatrixXd::Constant(1, 14, 0.1);
  usage.rightCols(4).setConstant(0.9);  // steps 10..13
  auto panel = trace_from(usage);
  OracleForecaster oracle(panel);
  SchedulerConfig cfg;
  cfg.horizon = 1;
  auto report = run_schedule_sim(oracle, panel, cfg);
  // t = 6..8 schedule (next step 0.1), t = 9 sees 0.9 coming.
  EXPECT_EQ(report.placements, 3u);
  EXPECT_EQ(report.withdrawals, 1u);
}

TEST(Scheduler, ForecasterFailureSkipsTheStep) {
  std::mt19937_64 rng(5);
  auto panel = trace_from(random_usage(3, 16, rng));
  FlakyForecaster f(3);
  auto report = run_schedule_sim(f, panel, SchedulerConfig{});
  EXPECT_EQ(report.steps.size(), 7u);  // t = 6..12
  EXPECT_EQ(report.failed_steps, 3u);  // odd steps 7, 9, 11
  EXPECT_EQ(report.placements, 4u * 3u);
}

TEST(Scheduler, DeadlineViolationsAreCounted) {
  std::mt19937_64 rng(6);
  auto panel = trace_from(random_usage(2, 12, rng));
  SlowForecaster f;
  SchedulerConfig cfg;
  cfg.deadline_seconds = 0.005;
  auto report = run_schedule_sim(f, panel, cfg);
  EXPECT_EQ(report.deadline_violations, report.steps.size());
  cfg.deadline_seconds = 300.0;
  EXPECT_EQ(run_schedule_sim(f, panel, cfg).deadline_violations, 0u);
  cfg.deadline_seconds.reset();
  EXPECT_EQ(run_schedule_sim(f, panel, cfg).deadline_seconds, 300.0);
}

TEST(Scheduler, ValidatesInputs) {
  auto panel = trace_from(Eigen::MatrixXd::Constant(2, 9, 0.5));
  OracleForecaster oracle(panel);
  EXPECT_THROW(run_schedule_sim(oracle, panel, SchedulerConfig{}), Error);
  SchedulerConfig bad;
  bad.epsilon = 1.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = {};
  bad.lambda = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  EXPECT_DOUBLE_EQ(SchedulerConfig{}.cancel_threshold(), 0.4375);
}

TEST(Scheduler, CsvLog) {
  Eigen::MatrixXd usage = Eigen::MatrixXd::Constant(2, 11, 0.1);
  auto panel = trace_from(usage);
  OracleForecaster oracle(panel);
  auto report = run_schedule_sim(oracle, panel, SchedulerConfig{});
  const std::string csv = report.to_csv();
  EXPECT_EQ(csv.rfind("step,node,decision,forecast_mean,actual_mean\n", 0), 0u);
  EXPECT_NE(csv.find("\n6,1,scheduled,"), std::string::npos);
}
