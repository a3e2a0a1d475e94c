// SPDX-License-Identifier: Apache-2.0
#include "graphdf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "graphdf/error.hpp"
#include "graphdf/io.hpp"

namespace graphdf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd ForecastDistribution::mean() const {
  require_shape(!samples.empty(), "forecast has no samples");
  MatrixXd m = MatrixXd::Zero(samples[0].rows(), samples[0].cols());
  for (const auto& s : samples) m += s;
  return m / static_cast<double>(samples.size());
}

nlohmann::json ForecastDistribution::to_json(const std::vector<std::string>& node_ids) const {
  nlohmann::json s = nlohmann::json::array();
  for (const auto& m : samples) s.push_back(io::matrix_to_json(m));
  return {{"format", "graphdf-forecast"}, {"version", 1},         {"horizon", horizon},
          {"base_timestamp", base_timestamp}, {"seed", seed},     {"num_samples", samples.size()},
          {"node_ids", node_ids},             {"samples", s}};
}

ForecastDistribution ForecastDistribution::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "graphdf-forecast") fail(ErrorKind::InvalidValue, "not a forecast file");
    ForecastDistribution d;
    d.horizon = j.at("horizon").get<std::size_t>();
    d.base_timestamp = j.at("base_timestamp").get<std::int64_t>();
    d.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& s : j.at("samples")) d.samples.push_back(io::matrix_from_json(s));
    if (d.samples.empty()) fail(ErrorKind::InvalidValue, "forecast file has no samples");
    return d;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidValue, fmt::format("malformed forecast: {}", e.what()));
  }
}

std::vector<MatrixXd> future_covariates(const TimeSeriesPanel& history, std::size_t tau) {
  require_shape(history.num_steps() > 0, "history is empty");
  const std::size_t d = history.num_covariates();
  const auto n = static_cast<Eigen::Index>(history.num_nodes());
  std::vector<MatrixXd> out;
  out.reserve(tau);
  for (std::size_t h = 1; h <= tau; ++h) {
    MatrixXd block(n, static_cast<Eigen::Index>(d));
    if (d > 0) {
      const auto ts = history.timestamps.back() + static_cast<std::int64_t>(h) * history.period_seconds;
      const VectorXd f = time_features(ts, 1.0, d);
      block = f.transpose().replicate(n, 1);
    }
    out.push_back(std::move(block));
  }
  return out;
}

namespace {

struct Rollout {
  ModelState state;
  VectorXd lag;  // scaled z at the last history step
};

// Zero state, then lookback - 1 observed steps ending at the last history step.
Rollout warm_up(const SequenceModel& model, const TimeSeriesPanel& history, std::size_t lookback) {
  require_shape(history.num_nodes() == model.num_nodes(), "history and model node counts differ");
  require_shape(history.num_covariates() == model.num_covariates(), "history and model covariate counts differ");
  if (history.num_steps() < 1) fail(ErrorKind::MissingObservation, "forecasting needs at least one observation");
  if (lookback < 1) fail(ErrorKind::InvalidValue, "lookback must be >= 1");
  const auto t_end = history.num_steps();
  const MatrixXd scaled = model.scaling().scale(history.targets);
  Rollout r{model.initial_state(), VectorXd()};
  const std::size_t warm = std::min(lookback - 1, t_end - 1);
  for (std::size_t t = t_end - warm; t < t_end; ++t)
    model.step(r.state, scaled.col(static_cast<Eigen::Index>(t - 1)), history.covariates_at(t));
  r.lag = scaled.col(static_cast<Eigen::Index>(t_end - 1));
  return r;
}

const std::vector<MatrixXd>& resolve_future(const TimeSeriesPanel& history, std::size_t tau,
                                            const std::vector<MatrixXd>* future, std::vector<MatrixXd>& storage) {
  if (future != nullptr) {
    require_shape(future->size() >= tau, "fewer future covariate blocks than forecast steps");
    return *future;
  }
  storage = future_covariates(history, tau);
  return storage;
}

}  // namespace

ForecastDistribution forecast_samples(const SequenceModel& model, const TimeSeriesPanel& history, std::size_t tau,
                                      const ForecastOptions& options, const std::vector<MatrixXd>* future) {
  if (tau < 1) fail(ErrorKind::InvalidValue, "horizon must be >= 1");
  if (options.num_samples < 1) fail(ErrorKind::InvalidValue, "need at least one sample path");
  if (!(options.sigma_scale >= 0.0)) fail(ErrorKind::InvalidValue, "sigma scale must be >= 0");
  std::vector<MatrixXd> storage;
  const auto& cov = resolve_future(history, tau, future, storage);
  const Rollout start = warm_up(model, history, options.lookback);
  const auto n = static_cast<Eigen::Index>(model.num_nodes());

  ForecastDistribution dist;
  dist.horizon = tau;
  dist.seed = options.seed;
  dist.base_timestamp = history.timestamps.back() + history.period_seconds;
  dist.samples.assign(options.num_samples, MatrixXd());
  parallel_for(options.num_samples, model.threads(), [&](std::size_t s) {
    std::mt19937_64 rng(derive_seed(options.seed, s));
    std::normal_distribution<double> normal(0.0, 1.0);
    ModelState state = start.state;
    VectorXd lag = start.lag;
    MatrixXd path(n, static_cast<Eigen::Index>(tau));
    for (std::size_t h = 0; h < tau; ++h) {
      const StepOutput out = model.step(state, lag, cov[h]);
      for (Eigen::Index i = 0; i < n; ++i) lag(i) = out.mean(i) + options.sigma_scale * out.sigma(i) * normal(rng);
      path.col(static_cast<Eigen::Index>(h)) = lag;
    }
    dist.samples[s] = model.scaling().unscale(path);
  });
  return dist;
}

MatrixXd point_forecast(const SequenceModel& model, const TimeSeriesPanel& history, std::size_t tau,
                        std::size_t lookback, const std::vector<MatrixXd>* future) {
  if (tau < 1) fail(ErrorKind::InvalidValue, "horizon must be >= 1");
  std::vector<MatrixXd> storage;
  const auto& cov = resolve_future(history, tau, future, storage);
  Rollout r = warm_up(model, history, lookback);
  MatrixXd path(static_cast<Eigen::Index>(model.num_nodes()), static_cast<Eigen::Index>(tau));
  for (std::size_t h = 0; h < tau; ++h) {
    r.lag = model.step(r.state, r.lag, cov[h]).mean;
    path.col(static_cast<Eigen::Index>(h)) = r.lag;
  }
  return model.scaling().unscale(path);
}

double empirical_quantile(std::vector<double> values, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) fail(ErrorKind::InvalidValue, fmt::format("rho must lie in (0, 1), got {}", rho));
  if (values.empty()) fail(ErrorKind::InvalidValue, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = rho * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

MatrixXd rho_quantile(const ForecastDistribution& dist, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) fail(ErrorKind::InvalidValue, fmt::format("rho must lie in (0, 1), got {}", rho));
  require_shape(!dist.samples.empty(), "forecast has no samples");
  const auto rows = dist.samples[0].rows(), cols = dist.samples[0].cols();
  MatrixXd q(rows, cols);
  std::vector<double> buf(dist.samples.size());
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index t = 0; t < cols; ++t) {
      for (std::size_t s = 0; s < dist.samples.size(); ++s) buf[s] = dist.samples[s](i, t);
      q(i, t) = empirical_quantile(buf, rho);
    }
  return q;
}

double quantile_loss(double z, double zhat, double rho) {
  const double over = z > zhat ? z - zhat : 0.0;
  const double under = zhat > z ? zhat - z : 0.0;
  return 2.0 * (rho * over + (1.0 - rho) * under);
}

double normalized_quantile_loss(const MatrixXd& actual, const MatrixXd& predicted, double rho) {
  require_shape(actual.rows() == predicted.rows() && actual.cols() == predicted.cols(),
                "actuals and predictions differ in shape");
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < actual.rows(); ++i)
    for (Eigen::Index t = 0; t < actual.cols(); ++t) {
      num += quantile_loss(actual(i, t), predicted(i, t), rho);
      den += std::abs(actual(i, t));
    }
  if (den == 0.0) fail(ErrorKind::DegenerateDenominator, "all actual values are zero");
  return num / den;
}

nlohmann::json EvaluationReport::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : entries)
    out.push_back({{"rho", e.rho},
                   {"tau", e.tau},
                   {"normalized_quantile_loss", e.normalized_loss},
                   {"num_samples", e.num_samples},
                   {"seed", e.seed},
                   {"origins", e.origins}});
  return {{"entries", out}};
}

std::string EvaluationReport::per_node_csv() const {
  std::string csv = "node,rho,tau,quantile_loss,abs_actual\n";
  for (const auto& e : entries)
    for (Eigen::Index i = 0; i < e.node_loss.size(); ++i) {
      const auto idx = static_cast<std::size_t>(i);
      const std::string id = idx < node_ids.size() ? node_ids[idx] : std::to_string(idx);
      csv += fmt::format("{},{},{},{},{}\n", id, e.rho, e.tau, e.node_loss(i), e.node_actual(i));
    }
  return csv;
}

namespace {

void accumulate(EvaluationEntry& e, const MatrixXd& actual, const MatrixXd& predicted) {
  for (Eigen::Index i = 0; i < actual.rows(); ++i)
    for (Eigen::Index t = 0; t < actual.cols(); ++t) {
      e.node_loss(i) += quantile_loss(actual(i, t), predicted(i, t), e.rho);
      e.node_actual(i) += std::abs(actual(i, t));
    }
}

void finish(EvaluationEntry& e) {
  const double den = e.node_actual.sum();
  if (den == 0.0) fail(ErrorKind::DegenerateDenominator, "all actual values are zero");
  e.normalized_loss = e.node_loss.sum() / den;
}

}  // namespace

EvaluationReport backtest(const SequenceModel& model, const TimeSeriesPanel& panel,
                          const std::vector<std::size_t>& origins, const std::vector<std::size_t>& taus,
                          const std::vector<double>& rhos, const ForecastOptions& options) {
  if (origins.empty() || taus.empty() || rhos.empty())
    fail(ErrorKind::InvalidValue, "backtest needs origins, horizons and quantile levels");
  const std::size_t max_tau = *std::max_element(taus.begin(), taus.end());
  const auto n = static_cast<Eigen::Index>(panel.num_nodes());
  EvaluationReport report;
  report.node_ids = panel.node_ids;
  for (auto tau : taus)
    for (auto rho : rhos) {
      if (!(rho > 0.0 && rho < 1.0)) fail(ErrorKind::InvalidValue, fmt::format("rho must lie in (0, 1), got {}", rho));
      report.entries.push_back({rho, tau, 0.0, options.num_samples, options.seed, origins.size(), VectorXd::Zero(n),
                                VectorXd::Zero(n)});
    }
  for (std::size_t k = 0; k < origins.size(); ++k) {
    const std::size_t t0 = origins[k];
    if (t0 < 1 || t0 + max_tau > panel.num_steps())
      fail(ErrorKind::InvalidValue, fmt::format("origin {} leaves no room for horizon {}", t0, max_tau));
    const TimeSeriesPanel history = panel.slice(0, t0);
    std::vector<MatrixXd> future;
    for (std::size_t h = 0; h < max_tau; ++h) future.push_back(panel.covariates_at(t0 + h));
    ForecastOptions opt = options;
    opt.seed = derive_seed(options.seed, k);
    const ForecastDistribution dist = forecast_samples(model, history, max_tau, opt, &future);
    const MatrixXd actual = panel.targets.middleCols(static_cast<Eigen::Index>(t0), static_cast<Eigen::Index>(max_tau));
    for (auto& e : report.entries) {
      const MatrixXd q = rho_quantile(dist, e.rho);
      const auto cols = static_cast<Eigen::Index>(e.tau);
      accumulate(e, actual.leftCols(cols), q.leftCols(cols));
    }
  }
  for (auto& e : report.entries) finish(e);
  return report;
}

EvaluationReport evaluate_forecast(const ForecastDistribution& dist, const MatrixXd& actual,
                                   const std::vector<double>& rhos, const std::vector<std::string>& node_ids) {
  require_shape(!dist.samples.empty(), "forecast has no samples");
  require_shape(actual.rows() == dist.samples[0].rows() && actual.cols() >= static_cast<Eigen::Index>(dist.horizon),
                "actuals do not cover the forecast horizon");
  EvaluationReport report;
  report.node_ids = node_ids;
  const auto n = actual.rows();
  const auto cols = static_cast<Eigen::Index>(dist.horizon);
  for (auto rho : rhos) {
    EvaluationEntry e{rho, dist.horizon, 0.0, dist.num_samples(), dist.seed, 1, VectorXd::Zero(n), VectorXd::Zero(n)};
    accumulate(e, actual.leftCols(cols), rho_quantile(dist, rho));
    finish(e);
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace graphdf
