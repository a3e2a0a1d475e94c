// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "graphdf/cells.hpp"
#include "graphdf/graph.hpp"
#include "graphdf/panel.hpp"
#include "graphdf/spectral.hpp"

namespace graphdf {

enum class CellKind { graph_gcrn, graph_dcgru, plain_rnn };

std::string to_string(CellKind kind);
CellKind parse_cell_kind(const std::string& text);

struct VariantConfig {
  CellKind global_kind = CellKind::graph_gcrn;
  CellKind local_kind = CellKind::graph_gcrn;
  std::size_t k_factors = 10;
  std::size_t q_hidden = 50;
  std::size_t r_hidden = 5;
  std::size_t hops = 1;
  std::size_t cheb_order = 1;
  /// One local cell and head for all nodes instead of one per node.
  bool share_local = false;

  /// "gg", "gr" or "rg" with the graph cell family `cell` ("gcrn" or "dcgru").
  static VariantConfig named(const std::string& variant, const std::string& cell = "gcrn");
  /// "gg", "gr", "rg", or "custom" when neither matches.
  std::string variant_name() const;
  void validate() const;
};

nlohmann::json to_json(const VariantConfig& cfg);
VariantConfig variant_from_json(const nlohmann::json& j);

/// Per-node affine map of targets onto [0, 1] (min-max over the fitting data).
struct NodeScaling {
  Eigen::VectorXd offset;
  Eigen::VectorXd range;

  static NodeScaling identity(std::size_t n);
  static NodeScaling min_max(const Eigen::MatrixXd& targets);
  Eigen::MatrixXd scale(const Eigen::MatrixXd& targets) const;
  Eigen::MatrixXd unscale(const Eigen::MatrixXd& scaled) const;
  std::size_t size() const { return static_cast<std::size_t>(offset.size()); }
};

/// Recurrent state of a whole model. `global` is N x Q (1 x Q for a plain
/// global RNN); `local[i]` belongs to node i.
struct ModelState {
  CellState global;
  std::vector<CellState> local;
};

struct StepOutput {
  Eigen::VectorXd mean;   // c_t per node, scaled units
  Eigen::VectorXd sigma;  // > 0, scaled units; NaN for nodes not evaluated
};

/// Everything a backward pass needs from one forward step.
struct StepTrace {
  std::vector<std::size_t> active;
  CellCache global_cache;
  Eigen::MatrixXd global_hidden;
  Eigen::MatrixXd factors;  // S_t, N x K
  std::vector<CellCache> local_caches;
  Eigen::MatrixXd local_hidden;  // node rows of the local hidden states, N x R
  Eigen::VectorXd head_pre;      // pre-activation of the sigma head
  Eigen::VectorXd mean_pre;      // pre-activation of the mean head (baseline only)
};

using TensorVisitor = std::function<void(const std::string&, Eigen::MatrixXd&)>;

/// A one-step-ahead Gaussian forecaster over N nodes that can be trained by
/// backpropagation through time. Inputs and outputs are in scaled units.
class SequenceModel {
 public:
  virtual ~SequenceModel() = default;

  virtual std::unique_ptr<SequenceModel> clone() const = 0;
  virtual std::string kind() const = 0;
  virtual std::size_t num_nodes() const = 0;
  virtual std::size_t num_covariates() const = 0;
  virtual const NodeScaling& scaling() const = 0;
  virtual void set_scaling(NodeScaling scaling) = 0;

  virtual ModelState initial_state() const = 0;

  /// Advances `state` by one step given lagged targets (N) and covariates
  /// (N x D). Sigma is computed for `active` nodes only (all when empty).
  virtual StepOutput step(ModelState& state, const Eigen::VectorXd& lag, const Eigen::MatrixXd& covariates,
                          std::span<const std::size_t> active = {}, StepTrace* trace = nullptr) const = 0;

  /// Backpropagates dLoss/dmean and dLoss/dsigma of one traced step.
  /// `carry` holds dLoss/dstate_t on entry and dLoss/dstate_{t-1} on exit;
  /// parameter gradients are added to the tensors of `grads`, a model of the
  /// same structure.
  virtual void backward(const StepTrace& trace, const Eigen::VectorXd& d_mean, const Eigen::VectorXd& d_sigma,
                        ModelState& carry, SequenceModel& grads) const = 0;

  /// Visits every trainable tensor in a fixed order.
  virtual void for_each_tensor(const TensorVisitor& fn) = 0;

  /// Caps the worker threads used for per-node work. 1 disables threading.
  void set_threads(std::size_t threads) { threads_ = threads == 0 ? 1 : threads; }
  std::size_t threads() const { return threads_; }

 protected:
  std::size_t threads_ = 1;
};

/// Copy of `model` with every trainable entry set to zero.
std::unique_ptr<SequenceModel> zero_gradients(const SequenceModel& model);

/// Number of trainable scalars.
std::size_t parameter_count(SequenceModel& model);

/// softplus(x) = ln(1 + e^x), evaluated without overflow, never below the
/// smallest normal double.
double softplus(double x);
double softplus_derivative(double x);

/// c = <embedding row i, S row i>.
double fixed_effect(const Eigen::MatrixXd& factors, const Eigen::MatrixXd& embeddings, std::size_t node);

/// N x (1 + D) signal at step t: column 0 is z_{t-1}, then x_t. Throws NoLag
/// at t = 0.
Eigen::MatrixXd graph_signal(const TimeSeriesPanel& panel, std::size_t t);

/// Rows of `graph_signal` restricted to a neighborhood, node first.
Eigen::MatrixXd local_input_signal(const TimeSeriesPanel& panel, const Neighborhood& neighborhood, std::size_t t);

struct GraphDFParams {
  CellParams global_cell;
  Eigen::MatrixXd factor_weight;  // Q x K
  Eigen::MatrixXd factor_bias;    // 1 x K
  Eigen::MatrixXd embeddings;     // N x K
  std::vector<CellParams> local_cells;  // N entries, or 1 when shared
  Eigen::MatrixXd head_weight;  // N x R (1 x R when shared)
  Eigen::MatrixXd head_bias;    // N x 1 (1 x 1 when shared)
};

class GraphDFModel final : public SequenceModel {
 public:
  /// Builds operators for `graph` and draws initial parameters from `seed`.
  GraphDFModel(VariantConfig config, Graph graph, std::size_t num_covariates, NodeScaling scaling,
               std::uint64_t seed);

  std::unique_ptr<SequenceModel> clone() const override;
  std::string kind() const override { return "graphdf"; }
  std::size_t num_nodes() const override { return graph_.n; }
  std::size_t num_covariates() const override { return num_covariates_; }
  const NodeScaling& scaling() const override { return scaling_; }
  void set_scaling(NodeScaling scaling) override;

  ModelState initial_state() const override;
  StepOutput step(ModelState& state, const Eigen::VectorXd& lag, const Eigen::MatrixXd& covariates,
                  std::span<const std::size_t> active = {}, StepTrace* trace = nullptr) const override;
  void backward(const StepTrace& trace, const Eigen::VectorXd& d_mean, const Eigen::VectorXd& d_sigma,
                ModelState& carry, SequenceModel& grads) const override;
  void for_each_tensor(const TensorVisitor& fn) override;

  /// One global recurrent step plus projection: returns S_t (N x K).
  Eigen::MatrixXd global_factors(CellState& global_state, const Eigen::MatrixXd& signal,
                                 CellCache* cache = nullptr, Eigen::MatrixXd* hidden = nullptr) const;
  /// One local step for `node` on its neighborhood signal; returns sigma.
  double local_sigma(std::size_t node, CellState& local_state, const Eigen::MatrixXd& local_signal,
                     CellCache* cache = nullptr, Eigen::RowVectorXd* hidden = nullptr) const;

  const VariantConfig& config() const { return config_; }
  const Graph& graph() const { return graph_; }
  const LaplacianBundle& bundle() const { return bundle_; }
  const std::vector<std::size_t>& neighborhood(std::size_t node) const { return neighborhoods_[node]; }
  GraphDFParams& params() { return params_; }
  const GraphDFParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }

  nlohmann::json to_json() const;
  static GraphDFModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static GraphDFModel load(const std::filesystem::path& path);

 private:
  const CellParams& local_cell(std::size_t node) const;
  CellParams& local_cell(std::size_t node);
  std::size_t head_row(std::size_t node) const { return config_.share_local ? 0 : node; }

  VariantConfig config_;
  Graph graph_;
  std::size_t num_covariates_ = 0;
  NodeScaling scaling_;
  std::uint64_t seed_ = 0;
  LaplacianBundle bundle_;
  GraphFilter global_filter_;
  std::vector<std::vector<std::size_t>> neighborhoods_;
  std::vector<GraphFilter> local_filters_;
  GraphDFParams params_;
};

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers. Each index is
/// handled by exactly one worker, so writes to per-index slots need no locks.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// SplitMix64 mix of a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace graphdf
