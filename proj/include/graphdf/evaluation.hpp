// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "graphdf/model.hpp"
#include "graphdf/panel.hpp"

namespace graphdf {

/// Sample paths of a multi-step forecast, in the panel's units.
struct ForecastDistribution {
  std::vector<Eigen::MatrixXd> samples;  // S entries, each N x tau
  std::size_t horizon = 0;
  std::int64_t base_timestamp = 0;  // timestamp of the first forecast step
  std::uint64_t seed = 0;

  std::size_t num_samples() const { return samples.size(); }
  Eigen::MatrixXd mean() const;
  nlohmann::json to_json(const std::vector<std::string>& node_ids = {}) const;
  static ForecastDistribution from_json(const nlohmann::json& j);
};

struct ForecastOptions {
  std::size_t num_samples = 100;
  std::uint64_t seed = 0;
  std::size_t lookback = 6;
  /// Multiplies every sigma; 0 makes the forecast deterministic.
  double sigma_scale = 1.0;
};

/// Covariate blocks for the `tau` steps after the end of `history`, from the
/// continued timestamp grid. The position feature is clamped at 1.
std::vector<Eigen::MatrixXd> future_covariates(const TimeSeriesPanel& history, std::size_t tau);

/// Runs the model over the last `lookback - 1` steps of `history` from a
/// zero state, then rolls `tau` steps forward autoregressively. `future`
/// overrides the covariates of the forecast steps.
ForecastDistribution forecast_samples(const SequenceModel& model, const TimeSeriesPanel& history, std::size_t tau,
                                      const ForecastOptions& options,
                                      const std::vector<Eigen::MatrixXd>* future = nullptr);

/// Same rollout feeding the predictive mean back instead of a sample.
Eigen::MatrixXd point_forecast(const SequenceModel& model, const TimeSeriesPanel& history, std::size_t tau,
                               std::size_t lookback, const std::vector<Eigen::MatrixXd>* future = nullptr);

/// Empirical quantile per (node, step) with linear interpolation between
/// order statistics. Throws InvalidValue unless 0 < rho < 1.
Eigen::MatrixXd rho_quantile(const ForecastDistribution& dist, double rho);
double empirical_quantile(std::vector<double> values, double rho);

/// 2 [rho (z - zhat)^+ + (1 - rho) (zhat - z)^+].
double quantile_loss(double z, double zhat, double rho);

/// sum QL / sum |z| over every entry. Throws DegenerateDenominator when all
/// actuals are zero.
double normalized_quantile_loss(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted, double rho);

struct EvaluationEntry {
  double rho = 0.5;
  std::size_t tau = 1;
  double normalized_loss = 0.0;
  std::size_t num_samples = 0;
  std::uint64_t seed = 0;
  std::size_t origins = 0;
  Eigen::VectorXd node_loss;    // summed QL per node
  Eigen::VectorXd node_actual;  // summed |z| per node
};

struct EvaluationReport {
  std::vector<EvaluationEntry> entries;
  std::vector<std::string> node_ids;

  nlohmann::json to_json() const;
  /// `node,rho,tau,quantile_loss,abs_actual` rows.
  std::string per_node_csv() const;
};

/// Rolling-origin backtest: at each origin T0 the model sees panel steps
/// [0, T0) and is scored on [T0, T0 + tau).
EvaluationReport backtest(const SequenceModel& model, const TimeSeriesPanel& panel,
                          const std::vector<std::size_t>& origins, const std::vector<std::size_t>& taus,
                          const std::vector<double>& rhos, const ForecastOptions& options);

/// Scores a stored forecast against the `horizon` steps of `actual`
/// that follow the forecast base.
EvaluationReport evaluate_forecast(const ForecastDistribution& dist, const Eigen::MatrixXd& actual,
                                   const std::vector<double>& rhos, const std::vector<std::string>& node_ids = {});

}  // namespace graphdf
