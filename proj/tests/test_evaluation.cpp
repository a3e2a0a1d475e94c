// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "graphdf/error.hpp"
#include "graphdf/evaluation.hpp"
#include "graphdf/training.hpp"
#include "test_util.hpp"

using namespace graphdf;

namespace {

struct Fixture {
  TimeSeriesPanel panel;
  Graph graph;
  std::unique_ptr<GraphDFModel> model;
};

Fixture small_model(std::uint64_t seed, std::size_t nodes = 4) {
  SynthConfig sc;
  sc.n_nodes = nodes;
  sc.n_steps = 40;
  sc.seed = seed;
  auto [panel, graph] = synth_panel(sc);
  auto cfg = VariantConfig::named("gg");
  cfg.k_factors = 3;
  cfg.q_hidden = 4;
  cfg.r_hidden = 3;
  auto model = std::make_unique<GraphDFModel>(cfg, graph, panel.num_covariates(), NodeScaling::min_max(panel.targets),
                                              seed);
  return {std::move(panel), std::move(graph), std::move(model)};
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no graphdf::Error thrown";
  return ErrorKind::Io;
}

}  // namespace

TEST(Quantile, Examples) {
  EXPECT_EQ(empirical_quantile({5, 1, 4, 2, 3}, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(empirical_quantile({10, 0}, 0.9), 9.0);
  for (double rho : {0.01, 0.3, 0.5, 0.99}) EXPECT_EQ(empirical_quantile({2.5, 2.5, 2.5}, rho), 2.5);
  EXPECT_EQ(kind_of([] { empirical_quantile({1, 2}, 0.0); }), ErrorKind::InvalidValue);
  EXPECT_EQ(kind_of([] { empirical_quantile({1, 2}, 1.0); }), ErrorKind::InvalidValue);
}

TEST(Quantile, RhoQuantileMonotone) {
  auto f = small_model(1);
  ForecastOptions opt;
  opt.num_samples = 50;
  auto dist = forecast_samples(*f.model, f.panel, 3, opt);
  Eigen::MatrixXd prev = rho_quantile(dist, 0.05);
  for (double rho = 0.1; rho < 0.96; rho += 0.05) {
    Eigen::MatrixXd q = rho_quantile(dist, rho);
    EXPECT_TRUE((q.array() >= prev.array()).all()) << rho;
    prev = q;
  }
  EXPECT_THROW(rho_quantile(dist, 1.2), Error);
}

TEST(QuantileLoss, Examples) {
  EXPECT_EQ(quantile_loss(4.0, 4.0, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(quantile_loss(10, 8, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(quantile_loss(10, 12, 0.9), 0.4);
  EXPECT_DOUBLE_EQ(quantile_loss(10, 8, 0.9), 3.6);
}

TEST(QuantileLoss, MedianIsAbsoluteErrorAndNonNegative) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5, 5), r(0.01, 0.99);
  for (int k = 0; k < 1000; ++k) {
    const double z = u(rng), zh = u(rng), rho = r(rng);
    EXPECT_DOUBLE_EQ(quantile_loss(z, zh, 0.5), std::abs(z - zh));
    EXPECT_GT(quantile_loss(z, zh, rho), 0.0);
  }
}

TEST(NormalizedQuantileLoss, Examples) {
  Eigen::MatrixXd z = Eigen::MatrixXd::Constant(1, 1, 10.0), zh = Eigen::MatrixXd::Constant(1, 1, 8.0);
  EXPECT_DOUBLE_EQ(normalized_quantile_loss(z, zh, 0.5), 0.2);
  std::mt19937_64 rng(3);
  Eigen::MatrixXd a = test::random_matrix(4, 5, rng).cwiseAbs();
  EXPECT_EQ(normalized_quantile_loss(a, a, 0.9), 0.0);
  Eigen::MatrixXd p = test::random_matrix(4, 5, rng).cwiseAbs();
  for (double alpha : {0.5, 3.0, 1e4})
    EXPECT_NEAR(normalized_quantile_loss(alpha * a, alpha * p, 0.9), normalized_quantile_loss(a, p, 0.9), 1e-12);
  EXPECT_EQ(kind_of([] { normalized_quantile_loss(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Ones(2, 2), 0.5); }),
            ErrorKind::DegenerateDenominator);
  EXPECT_THROW(normalized_quantile_loss(a, Eigen::MatrixXd::Zero(2, 2), 0.5), Error);
}

TEST(Forecast, ZeroSigmaEqualsPointForecast) {
  auto f = small_model(4);
  for (std::size_t tau : {1u, 3u, 5u}) {
    ForecastOptions opt;
    opt.num_samples = 7;
    opt.sigma_scale = 0.0;
    auto dist = forecast_samples(*f.model, f.panel, tau, opt);
    Eigen::MatrixXd point = point_forecast(*f.model, f.panel, tau, opt.lookback);
    for (const auto& s : dist.samples) EXPECT_EQ(s, point);
  }
}

TEST(Forecast, SeedDeterminism) {
  auto f = small_model(5);
  ForecastOptions opt;
  opt.num_samples = 20;
  opt.seed = 11;
  auto a = forecast_samples(*f.model, f.panel, 3, opt);
  auto b = forecast_samples(*f.model, f.panel, 3, opt);
  for (std::size_t s = 0; s < a.samples.size(); ++s) EXPECT_EQ(a.samples[s], b.samples[s]);
  opt.seed = 12;
  auto c = forecast_samples(*f.model, f.panel, 3, opt);
  EXPECT_NE(a.samples[0], c.samples[0]);
  f.model->set_threads(4);
  opt.seed = 11;
  auto d = forecast_samples(*f.model, f.panel, 3, opt);
  for (std::size_t s = 0; s < a.samples.size(); ++s) EXPECT_EQ(a.samples[s], d.samples[s]);
}

TEST(Forecast, MonteCarloMeanConverges) {
  auto f = small_model(6, 3);
  ForecastOptions opt;
  opt.num_samples = 100000;
  auto dist = forecast_samples(*f.model, f.panel, 1, opt);
  Eigen::MatrixXd c = point_forecast(*f.model, f.panel, 1, opt.lookback);
  const double n = static_cast<double>(opt.num_samples);
  for (Eigen::Index i = 0; i < 3; ++i) {
    double sum = 0.0, sq = 0.0;
    for (const auto& s : dist.samples) {
      sum += s(i, 0);
      sq += s(i, 0) * s(i, 0);
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    EXPECT_GT(sd, 0.0);
    EXPECT_LE(std::abs(mean - c(i, 0)), 4.0 * sd / std::sqrt(n)) << "node " << i;
  }
}

TEST(Forecast, MedianOfSamplesConvergesToMean) {
  auto f = small_model(7, 3);
  ForecastOptions opt;
  opt.num_samples = 10000;
  auto dist = forecast_samples(*f.model, f.panel, 1, opt);
  Eigen::MatrixXd c = point_forecast(*f.model, f.panel, 1, opt.lookback);
  Eigen::MatrixXd median = rho_quantile(dist, 0.5);
  Eigen::MatrixXd mean = dist.mean();
  for (Eigen::Index i = 0; i < 3; ++i) {
    double sq = 0.0;
    for (const auto& s : dist.samples) sq += (s(i, 0) - mean(i, 0)) * (s(i, 0) - mean(i, 0));
    const double sd = std::sqrt(sq / 10000.0);
    const double se = 1.2533141373155 * sd / 100.0;  // standard error of a normal median
    EXPECT_LE(std::abs(median(i, 0) - c(i, 0)), 3.0 * se) << "node " << i;
  }
}

TEST(Forecast, FutureCovariatesContinueTheGrid) {
  auto f = small_model(8);
  auto history = f.panel.slice(0, 30);
  auto future = future_covariates(history, 3);
  ASSERT_EQ(future.size(), 3u);
  for (std::size_t h = 0; h < 3; ++h) {
    ASSERT_EQ(future[h].rows(), 4);
    ASSERT_EQ(future[h].cols(), 5);
    Eigen::VectorXd expected = time_features(history.timestamps.back() + static_cast<std::int64_t>(h + 1) * 300, 1.0);
    for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(future[h](2, k), expected(k));
    EXPECT_EQ(future[h](2, 4), 1.0);
  }
}

TEST(Forecast, DistributionJsonRoundTrip) {
  auto f = small_model(9);
  ForecastOptions opt;
  opt.num_samples = 5;
  auto dist = forecast_samples(*f.model, f.panel, 2, opt);
  auto back = ForecastDistribution::from_json(dist.to_json(f.panel.node_ids));
  EXPECT_EQ(back.horizon, 2u);
  EXPECT_EQ(back.base_timestamp, dist.base_timestamp);
  ASSERT_EQ(back.num_samples(), 5u);
  for (std::size_t s = 0; s < 5; ++s) EXPECT_EQ(back.samples[s], dist.samples[s]);
}

TEST(Backtest, ReportsEveryRhoAndTau) {
  auto f = small_model(10);
  ForecastOptions opt;
  opt.num_samples = 10;
  auto report = backtest(*f.model, f.panel, {30, 33}, {1, 3}, {0.5, 0.9}, opt);
  ASSERT_EQ(report.entries.size(), 4u);
  for (const auto& e : report.entries) {
    EXPECT_EQ(e.origins, 2u);
    EXPECT_TRUE(std::isfinite(e.normalized_loss));
    EXPECT_NEAR(e.normalized_loss, e.node_loss.sum() / e.node_actual.sum(), 1e-12);
  }
  auto j = report.to_json();
  EXPECT_FALSE(j.dump().empty());
  EXPECT_EQ(report.per_node_csv().rfind("node,rho,tau,quantile_loss,abs_actual\n", 0), 0u);
}

TEST(Backtest, SingleOriginMatchesDirectScoring) {
  auto f = small_model(11);
  ForecastOptions opt;
  opt.num_samples = 10;
  opt.seed = 3;
  auto report = backtest(*f.model, f.panel, {30}, {3}, {0.5}, opt);
  ForecastOptions direct = opt;
  direct.seed = derive_seed(opt.seed, 0);
  auto history = f.panel.slice(0, 30);
  std::vector<Eigen::MatrixXd> future;
  for (std::size_t h = 0; h < 3; ++h) future.push_back(f.panel.covariates_at(30 + h));
  auto dist = forecast_samples(*f.model, history, 3, direct, &future);
  const double expected = normalized_quantile_loss(f.panel.targets.middleCols(30, 3), rho_quantile(dist, 0.5), 0.5);
  ASSERT_EQ(report.entries.size(), 1u);
  EXPECT_DOUBLE_EQ(report.entries[0].normalized_loss, expected);
}

TEST(EvaluateForecast, ScoresAgainstActuals) {
  ForecastDistribution dist;
  dist.horizon = 2;
  dist.samples = {Eigen::MatrixXd::Constant(1, 2, 8.0), Eigen::MatrixXd::Constant(1, 2, 8.0)};
  Eigen::MatrixXd actual = Eigen::MatrixXd::Constant(1, 2, 10.0);
  auto report = evaluate_forecast(dist, actual, {0.5});
  ASSERT_EQ(report.entries.size(), 1u);
  EXPECT_DOUBLE_EQ(report.entries[0].normalized_loss, 0.2);
}
