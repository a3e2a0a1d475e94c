// SPDX-License-Identifier: Apache-2.0
#include "graphdf/scheduler.hpp"

#include <chrono>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "graphdf/error.hpp"
#include "graphdf/log.hpp"

namespace graphdf {

using Eigen::MatrixXd;

void SchedulerConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) fail(ErrorKind::InvalidValue, "epsilon must lie in (0, 1)");
  if (!(lambda > 0.0 && lambda <= 1.0)) fail(ErrorKind::InvalidValue, "lambda must lie in (0, 1]");
  if (lookback < 2) fail(ErrorKind::InvalidValue, "lookback must be >= 2");
  if (horizon < 1) fail(ErrorKind::InvalidValue, "horizon must be >= 1");
  if (retrain_every < 1) fail(ErrorKind::InvalidValue, "retrain_every must be >= 1");
  if (deadline_seconds && !(*deadline_seconds > 0.0)) fail(ErrorKind::InvalidValue, "deadline must be positive");
}

nlohmann::json to_json(const SchedulerConfig& cfg) {
  return {{"lookback", cfg.lookback},
          {"horizon", cfg.horizon},
          {"epsilon", cfg.epsilon},
          {"lambda", cfg.lambda},
          {"retrain_every", cfg.retrain_every},
          {"deadline_seconds", cfg.deadline_seconds ? nlohmann::json(*cfg.deadline_seconds) : nlohmann::json()}};
}

std::string to_string(Decision d) {
  switch (d) {
    case Decision::scheduled: return "scheduled";
    case Decision::skipped: return "skipped";
    case Decision::cancelled: return "cancelled";
  }
  return "unknown";
}

std::string ScheduleReport::to_csv() const {
  std::string csv = "step,node,decision,forecast_mean,actual_mean\n";
  for (const auto& r : records)
    csv += fmt::format("{},{},{},{},{}\n", r.step, r.node, to_string(r.decision), r.forecast_mean, r.actual_mean);
  return csv;
}

MatrixXd OracleForecaster::forecast(const TimeSeriesPanel& history, std::size_t step, std::size_t tau, bool) {
  require_shape(history.num_nodes() == truth_.num_nodes(), "oracle: node counts differ");
  require_shape(step + tau < truth_.num_steps(), "oracle: horizon runs past the trace");
  return truth_.targets.middleCols(static_cast<Eigen::Index>(step + 1), static_cast<Eigen::Index>(tau));
}

MatrixXd GraphDFForecaster::forecast(const TimeSeriesPanel& history, std::size_t, std::size_t tau, bool refit) {
  last_fit_seconds_ = 0.0;
  if (refit || !model_) {
    const auto t0 = std::chrono::steady_clock::now();
    auto fitted = train_graphdf(variant_, history, graph_, train_);
    model_ = std::make_unique<GraphDFModel>(std::move(fitted.first));
    last_fit_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  ForecastOptions opt = forecast_;
  opt.lookback = train_.lookback;
  return forecast_samples(*model_, history, tau, opt).mean();
}

ScheduleReport run_schedule_sim(Forecaster& forecaster, const TimeSeriesPanel& panel, const SchedulerConfig& cfg) {
  cfg.validate();
  const std::size_t w = cfg.lookback, tau = cfg.horizon;
  const std::size_t total = panel.num_steps();
  if (total <= w + tau)
    fail(ErrorKind::MissingObservation,
         fmt::format("trace has {} steps; the simulator needs more than lookback + horizon = {}", total, w + tau));
  const std::size_t n = panel.num_nodes();

  ScheduleReport report;
  report.num_nodes = n;
  report.epsilon = cfg.epsilon;
  report.lambda = cfg.lambda;
  report.deadline_seconds = cfg.deadline_seconds.value_or(static_cast<double>(panel.period_seconds));
  std::vector<bool> scheduled_before(n, false);

  std::size_t since_fit = cfg.retrain_every;
  for (std::size_t t = w; t + tau < total; ++t) {
    report.steps.push_back(t);
    const auto start = std::chrono::steady_clock::now();
    MatrixXd forecast;
    bool ok = true;
    try {
      const bool refit = since_fit >= cfg.retrain_every;
      forecast = forecaster.forecast(panel.slice(t - w, t + 1), t, tau, refit);
      since_fit = refit ? 1 : since_fit + 1;
      require_shape(forecast.rows() == static_cast<Eigen::Index>(n) && forecast.cols() == static_cast<Eigen::Index>(tau),
                    "forecaster returned the wrong shape");
      if (!forecast.allFinite()) fail(ErrorKind::NumericOverflow, "forecaster returned non-finite values");
    } catch (const Error& e) {
      logger().warn("step {}: forecaster failed ({}); step skipped", t, e.what());
      ok = false;
      ++report.failed_steps;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.step_seconds.push_back(seconds);
    if (seconds > report.deadline_seconds) ++report.deadline_violations;

    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      PlacementRecord rec;
      rec.step = t;
      rec.node = i;
      rec.actual_mean =
          panel.targets.row(ii).segment(static_cast<Eigen::Index>(t + 1), static_cast<Eigen::Index>(tau)).mean();
      if (!ok) {
        rec.forecast_mean = std::nan("");
        scheduled_before[i] = false;
        report.records.push_back(rec);
        continue;
      }
      rec.forecast_mean = forecast.row(ii).mean();
      if (rec.forecast_mean <= cfg.epsilon) {
        ++report.placements;
        report.acc += cfg.lambda * (1.0 - rec.forecast_mean);
        if (rec.actual_mean <= cfg.epsilon)
          ++report.correct;
        else
          ++report.incorrect;
        if (rec.actual_mean > cfg.cancel_threshold()) {
          rec.decision = Decision::cancelled;
          ++report.cancelled;
        } else {
          rec.decision = Decision::scheduled;
        }
        scheduled_before[i] = true;
      } else {
        if (scheduled_before[i]) ++report.withdrawals;
        scheduled_before[i] = false;
      }
      report.records.push_back(rec);
    }
  }
  return report;
}

nlohmann::json ScheduleMetrics::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  return {{"utilization_improvement", utilization_improvement},
          {"baseline_utilization", baseline_utilization},
          {"correct_ratio", opt(correct_ratio)},
          {"cancellation_ratio", opt(cancellation_ratio)},
          {"placements", placements}};
}

std::vector<double> baseline_utilization(const TimeSeriesPanel& panel, const ScheduleReport& report) {
  std::vector<double> out;
  out.reserve(report.steps.size());
  for (auto t : report.steps) out.push_back(panel.targets.col(static_cast<Eigen::Index>(t)).mean());
  return out;
}

ScheduleMetrics schedule_metrics(const ScheduleReport& report, const std::vector<double>& baseline) {
  require_shape(baseline.size() == report.steps.size(), "one baseline value per simulated step is required");
  ScheduleMetrics m;
  std::size_t correct = 0, cancelled = 0;
  double gain = 0.0;
  for (const auto& r : report.records) {
    if (r.decision == Decision::skipped) continue;
    ++m.placements;
    if (r.actual_mean <= report.epsilon) ++correct;
    if (r.decision == Decision::cancelled)
      ++cancelled;
    else
      gain += report.lambda * (1.0 - r.forecast_mean);
  }
  const double steps = static_cast<double>(report.steps.size());
  double base = 0.0;
  for (double b : baseline) base += b;
  if (!report.steps.empty() && report.num_nodes > 0) {
    m.baseline_utilization = 100.0 * base / steps;
    m.utilization_improvement = 100.0 * gain / (steps * static_cast<double>(report.num_nodes));
  }
  if (m.placements > 0) {
    m.correct_ratio = static_cast<double>(correct) / static_cast<double>(m.placements);
    m.cancellation_ratio = static_cast<double>(cancelled) / static_cast<double>(m.placements);
  }
  return m;
}

nlohmann::json summary_json(const ScheduleReport& report, const ScheduleMetrics& metrics) {
  return {{"metrics", metrics.to_json()},
          {"acc", report.acc},
          {"placements", report.placements},
          {"correct", report.correct},
          {"incorrect", report.incorrect},
          {"cancelled", report.cancelled},
          {"withdrawals", report.withdrawals},
          {"failed_steps", report.failed_steps},
          {"steps", report.steps.size()},
          {"epsilon", report.epsilon},
          {"lambda", report.lambda},
          {"deadline_seconds", report.deadline_seconds},
          {"deadline_violations", report.deadline_violations},
          {"step_seconds", report.step_seconds}};
}

}  // namespace graphdf
