// SPDX-License-Identifier: Apache-2.0
#include "graphdf/baseline.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "graphdf/error.hpp"

namespace graphdf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

LocalLstmBaseline::LocalLstmBaseline(std::size_t num_nodes, std::size_t num_covariates, std::size_t hidden,
                                     std::uint64_t seed)
    : num_covariates_(num_covariates), hidden_(hidden), scaling_(NodeScaling::identity(num_nodes)) {
  if (num_nodes == 0 || hidden == 0) fail(ErrorKind::InvalidValue, "baseline needs at least one node and unit");
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < num_nodes; ++i) cells_.push_back(init_lstm(1 + num_covariates, hidden, rng));
  const auto n = static_cast<Eigen::Index>(num_nodes);
  const auto r = static_cast<Eigen::Index>(hidden);
  mean_weight_ = xavier_uniform(n, r, rng);
  mean_bias_ = MatrixXd::Zero(n, 1);
  sigma_weight_ = xavier_uniform(n, r, rng);
  sigma_bias_ = MatrixXd::Zero(n, 1);
}

std::unique_ptr<SequenceModel> LocalLstmBaseline::clone() const { return std::make_unique<LocalLstmBaseline>(*this); }

void LocalLstmBaseline::set_scaling(NodeScaling scaling) {
  require_shape(scaling.size() == cells_.size(), "scaling and model disagree on node count");
  scaling_ = std::move(scaling);
}

ModelState LocalLstmBaseline::initial_state() const {
  ModelState s;
  const auto r = static_cast<Eigen::Index>(hidden_);
  s.local.assign(cells_.size(), CellState{MatrixXd::Zero(1, r), MatrixXd::Zero(1, r)});
  return s;
}

StepOutput LocalLstmBaseline::step(ModelState& state, const VectorXd& lag, const MatrixXd& covariates,
                                   std::span<const std::size_t> active, StepTrace* trace) const {
  const auto n = static_cast<Eigen::Index>(cells_.size());
  require_shape(lag.size() == n, "lag must have one entry per node");
  require_shape(covariates.rows() == n && static_cast<std::size_t>(covariates.cols()) == num_covariates_,
                fmt::format("covariates must be {} x {}", n, num_covariates_));
  std::vector<std::size_t> nodes(active.begin(), active.end());
  if (nodes.empty()) {
    nodes.resize(cells_.size());
    std::iota(nodes.begin(), nodes.end(), std::size_t{0});
  }
  StepOutput out;
  out.mean = VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  out.sigma = out.mean;
  if (trace != nullptr) {
    trace->active = nodes;
    trace->local_caches.assign(cells_.size(), CellCache{});
    trace->local_hidden = MatrixXd::Zero(n, static_cast<Eigen::Index>(hidden_));
    trace->head_pre = VectorXd::Zero(n);
    trace->mean_pre = VectorXd::Zero(n);
  }
  parallel_for(nodes.size(), threads_, [&](std::size_t j) {
    const std::size_t i = nodes[j];
    const auto ii = static_cast<Eigen::Index>(i);
    MatrixXd x(1, 1 + covariates.cols());
    x(0, 0) = lag(ii);
    x.rightCols(covariates.cols()) = covariates.row(ii);
    LstmCache* cache = trace != nullptr ? &trace->local_caches[i].emplace<LstmCache>() : nullptr;
    state.local[i] = lstm_step(cells_[i], state.local[i], x, cache);
    const Eigen::RowVectorXd h = state.local[i].hidden.row(0);
    const double pre = sigma_weight_.row(ii).dot(h) + sigma_bias_(ii, 0);
    out.mean(ii) = mean_weight_.row(ii).dot(h) + mean_bias_(ii, 0);
    out.sigma(ii) = softplus(pre);
    if (trace != nullptr) {
      trace->local_hidden.row(ii) = h;
      trace->head_pre(ii) = pre;
    }
  });
  return out;
}

void LocalLstmBaseline::backward(const StepTrace& trace, const VectorXd& d_mean, const VectorXd& d_sigma,
                                 ModelState& carry, SequenceModel& grads_base) const {
  auto& g = dynamic_cast<LocalLstmBaseline&>(grads_base);
  parallel_for(trace.active.size(), threads_, [&](std::size_t j) {
    const std::size_t i = trace.active[j];
    const auto ii = static_cast<Eigen::Index>(i);
    const double d_pre = d_sigma(ii) * softplus_derivative(trace.head_pre(ii));
    const Eigen::RowVectorXd h = trace.local_hidden.row(ii);
    g.mean_weight_.row(ii) += d_mean(ii) * h;
    g.mean_bias_(ii, 0) += d_mean(ii);
    g.sigma_weight_.row(ii) += d_pre * h;
    g.sigma_bias_(ii, 0) += d_pre;
    CellState d_out = carry.local[i];
    d_out.hidden.row(0) += d_mean(ii) * mean_weight_.row(ii) + d_pre * sigma_weight_.row(ii);
    CellState d_prev;
    lstm_backward(cells_[i], std::get<LstmCache>(trace.local_caches[i]), d_out, g.cells_[i], d_prev);
    carry.local[i] = std::move(d_prev);
  });
}

void LocalLstmBaseline::for_each_tensor(const TensorVisitor& fn) {
  for (std::size_t i = 0; i < cells_.size(); ++i)
    graphdf::for_each_tensor(cells_[i], [&](const std::string& name, MatrixXd& m) {
      fn(fmt::format("local{{{}}}.{}", i, name), m);
    });
  fn("mean_weight", mean_weight_);
  fn("mean_bias", mean_bias_);
  fn("sigma_weight", sigma_weight_);
  fn("sigma_bias", sigma_bias_);
}

}  // namespace graphdf
