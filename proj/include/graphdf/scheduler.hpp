// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "graphdf/evaluation.hpp"
#include "graphdf/graph.hpp"
#include "graphdf/model.hpp"
#include "graphdf/panel.hpp"
#include "graphdf/training.hpp"

namespace graphdf {

struct SchedulerConfig {
  std::size_t lookback = 6;
  std::size_t horizon = 3;
  double epsilon = 0.25;
  double lambda = 0.75;
  std::size_t retrain_every = 1;
  /// Per-step wall-clock budget; unset means the panel period.
  std::optional<double> deadline_seconds;

  void validate() const;
  /// Actual mean usage above which a placed batch job no longer fits:
  /// 1 - lambda (1 - epsilon).
  double cancel_threshold() const { return 1.0 - lambda * (1.0 - epsilon); }
};

nlohmann::json to_json(const SchedulerConfig& cfg);

/// `scheduled` and `cancelled` are both placements; a cancelled placement
/// was terminated because actual usage outgrew the room left for it.
enum class Decision { scheduled, skipped, cancelled };
std::string to_string(Decision d);

struct PlacementRecord {
  std::size_t step = 0;
  std::size_t node = 0;
  Decision decision = Decision::skipped;
  double forecast_mean = 0.0;
  double actual_mean = 0.0;
};

struct ScheduleReport {
  std::size_t num_nodes = 0;
  double epsilon = 0.25;
  double lambda = 0.75;
  std::vector<PlacementRecord> records;
  double acc = 0.0;  // sum of lambda (1 - forecast mean) over placements
  std::size_t placements = 0;
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  std::size_t cancelled = 0;
  /// Nodes scheduled at the previous step whose new forecast exceeds epsilon.
  std::size_t withdrawals = 0;
  std::vector<std::size_t> steps;
  std::vector<double> step_seconds;
  std::size_t deadline_violations = 0;
  std::size_t failed_steps = 0;
  double deadline_seconds = 0.0;

  /// `step,node,decision,forecast_mean,actual_mean`.
  std::string to_csv() const;
};

/// Model fitting plus forecasting, called once per simulated step.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::string name() const = 0;
  /// Mean forecast (N x tau) for the steps after the end of `history`.
  /// `step` is the absolute index of the last history column; `refit` asks
  /// for a fresh model.
  virtual Eigen::MatrixXd forecast(const TimeSeriesPanel& history, std::size_t step, std::size_t tau, bool refit) = 0;
};

/// Returns the true future values of a known trace.
class OracleForecaster final : public Forecaster {
 public:
  explicit OracleForecaster(TimeSeriesPanel truth) : truth_(std::move(truth)) {}
  std::string name() const override { return "oracle"; }
  Eigen::MatrixXd forecast(const TimeSeriesPanel& history, std::size_t step, std::size_t tau, bool refit) override;

 private:
  TimeSeriesPanel truth_;
};

/// Trains a GraphDF model on the trailing window and averages sample paths.
class GraphDFForecaster final : public Forecaster {
 public:
  GraphDFForecaster(VariantConfig variant, Graph graph, TrainConfig train, ForecastOptions forecast)
      : variant_(variant), graph_(std::move(graph)), train_(train), forecast_(forecast) {}
  std::string name() const override { return "graphdf-" + variant_.variant_name(); }
  Eigen::MatrixXd forecast(const TimeSeriesPanel& history, std::size_t step, std::size_t tau, bool refit) override;

  /// Wall-clock of the last fit, 0 when the model was reused.
  double last_fit_seconds() const { return last_fit_seconds_; }

 private:
  VariantConfig variant_;
  Graph graph_;
  TrainConfig train_;
  ForecastOptions forecast_;
  std::unique_ptr<GraphDFModel> model_;
  double last_fit_seconds_ = 0.0;
};

/// Replays `panel`: at each step t in [w, T - 1 - tau] the forecaster sees
/// steps [t - w, t] and nodes whose mean forecast over t+1..t+tau is at most
/// epsilon receive a batch job.
ScheduleReport run_schedule_sim(Forecaster& forecaster, const TimeSeriesPanel& panel, const SchedulerConfig& cfg);

struct ScheduleMetrics {
  double utilization_improvement = 0.0;  // percentage points
  double baseline_utilization = 0.0;     // percent
  std::optional<double> correct_ratio;
  std::optional<double> cancellation_ratio;
  std::size_t placements = 0;

  nlohmann::json to_json() const;
};

/// Recomputes the metrics from the decision log. `baseline_utilization` holds
/// the vanilla cluster mean usage at each step listed in `report.steps`.
ScheduleMetrics schedule_metrics(const ScheduleReport& report, const std::vector<double>& baseline_utilization);

/// Mean usage across nodes at each simulated step.
std::vector<double> baseline_utilization(const TimeSeriesPanel& panel, const ScheduleReport& report);

nlohmann::json summary_json(const ScheduleReport& report, const ScheduleMetrics& metrics);

}  // namespace graphdf
