// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "graphdf/cells.hpp"
#include "graphdf/model.hpp"

namespace graphdf {

/// Independent per-node LSTMs with a Gaussian head (linear mean, softplus
/// scale). Each node sees only its own lagged target and covariates; there
/// is no graph and no parameter sharing.
class LocalLstmBaseline final : public SequenceModel {
 public:
  LocalLstmBaseline(std::size_t num_nodes, std::size_t num_covariates, std::size_t hidden, std::uint64_t seed);

  std::unique_ptr<SequenceModel> clone() const override;
  std::string kind() const override { return "local_lstm"; }
  std::size_t num_nodes() const override { return cells_.size(); }
  std::size_t num_covariates() const override { return num_covariates_; }
  const NodeScaling& scaling() const override { return scaling_; }
  void set_scaling(NodeScaling scaling) override;

  ModelState initial_state() const override;
  StepOutput step(ModelState& state, const Eigen::VectorXd& lag, const Eigen::MatrixXd& covariates,
                  std::span<const std::size_t> active = {}, StepTrace* trace = nullptr) const override;
  void backward(const StepTrace& trace, const Eigen::VectorXd& d_mean, const Eigen::VectorXd& d_sigma,
                ModelState& carry, SequenceModel& grads) const override;
  void for_each_tensor(const TensorVisitor& fn) override;

 private:
  std::size_t num_covariates_ = 0;
  std::size_t hidden_ = 0;
  NodeScaling scaling_;
  std::vector<LstmParams> cells_;
  Eigen::MatrixXd mean_weight_, mean_bias_;    // N x R, N x 1
  Eigen::MatrixXd sigma_weight_, sigma_bias_;  // N x R, N x 1
};

}  // namespace graphdf
