// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "graphdf/model.hpp"
#include "graphdf/panel.hpp"

namespace graphdf {

struct TrainConfig {
  double lr = 1e-3;
  double lr_decay = 0.5;
  double min_lr = 5e-5;
  std::size_t epochs = 100;
  std::size_t patience = 10;
  bool early_stop = true;
  std::size_t lookback = 6;
  /// Non-overlapping windows of `lookback` steps taken back from the end of
  /// the panel; 0 tiles the whole panel, from a random offset each epoch.
  std::size_t windows = 0;
  std::uint64_t seed = 0;
  /// Nodes per optimizer step; 0 puts every node in one batch.
  std::size_t batch = 0;
  /// Global gradient-norm clip; 0 disables clipping.
  double clip = 0.0;
  std::size_t threads = 1;
  /// Print `epoch,loss,lr,seconds` lines to stderr.
  bool progress = false;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Fields missing from `j` keep the values already in `cfg`.
void merge_json(TrainConfig& cfg, const nlohmann::json& j);

enum class StopReason { completed, early_stop };
std::string to_string(StopReason reason);

struct TrainReport {
  std::vector<double> losses;  // mean NLL per (node, step), one per epoch
  std::vector<double> learning_rates;
  std::vector<double> epoch_seconds;
  StopReason stop_reason = StopReason::completed;
  std::size_t best_epoch = 0;
  double best_loss = 0.0;
  std::size_t parameters = 0;
  std::string checksum;  // SHA-1 of the final parameters

  nlohmann::json to_json() const;
};

/// 0.5 ln(2 pi sigma^2) + (z - c)^2 / (2 sigma^2). Throws InvalidValue when
/// sigma <= 0.
double gaussian_nll(double z, double c, double sigma);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Eigen::MatrixXd> m;
  std::vector<Eigen::MatrixXd> v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam update of `params` in place. State buffers are
/// created on first use.
void adam_step(std::span<Eigen::MatrixXd* const> params, std::span<const Eigen::MatrixXd* const> grads,
               AdamState& state, double lr, const AdamConfig& cfg = {});
void adam_step(SequenceModel& model, SequenceModel& grads, AdamState& state, double lr, const AdamConfig& cfg = {});

/// Scaled targets and per-step covariate blocks of a panel.
struct TrainingData {
  Eigen::MatrixXd targets;                  // N x T, scaled
  std::vector<Eigen::MatrixXd> covariates;  // T entries of N x D

  static TrainingData from_panel(const TimeSeriesPanel& panel, const NodeScaling& scaling);
  std::size_t num_steps() const { return static_cast<std::size_t>(targets.cols()); }
};

struct WindowLoss {
  double total = 0.0;  // summed NLL
  std::size_t count = 0;
};

/// Unrolls `model` from a zero state over steps [start, start + length),
/// start >= 1, and sums the NLL of `nodes` (all when empty). With `grads`,
/// adds d(total)/dparams to it.
WindowLoss window_loss(const SequenceModel& model, const TrainingData& data, std::size_t start, std::size_t length,
                       std::span<const std::size_t> nodes = {}, SequenceModel* grads = nullptr);

/// Start steps of the training windows, oldest first. Windows tile back from
/// step `num_steps - offset`.
std::vector<std::size_t> training_windows(std::size_t num_steps, std::size_t lookback, std::size_t windows,
                                          std::size_t offset = 0);

/// Fits `model` in place. The panel's per-node min-max scaling is installed
/// on the model first; the parameters of the best epoch are kept.
TrainReport train(SequenceModel& model, const TimeSeriesPanel& panel, const TrainConfig& cfg);

std::pair<GraphDFModel, TrainReport> train_graphdf(const VariantConfig& variant, const TimeSeriesPanel& panel,
                                                   const Graph& graph, const TrainConfig& cfg);

/// SHA-1 over the raw bytes of every parameter tensor.
std::string parameter_checksum(SequenceModel& model);

struct GradientGroup {
  double max_relative_error = 0.0;
  std::size_t entries = 0;
  std::string worst_entry;
};

struct GradientCheckReport {
  std::map<std::string, GradientGroup> groups;  // keyed by tensor name, node index stripped
  double max_relative_error = 0.0;

  bool passed(double tolerance) const { return max_relative_error <= tolerance; }
  nlohmann::json to_json() const;
};

struct GradientCheckOptions {
  double step = 1e-5;
  /// Denominator floor of the relative error |a - n| / max(|n|, floor).
  double floor = 1e-4;
  /// Multiplies the analytic gradient; anything but 1 is a fault injection.
  double corrupt_scale = 1.0;
};

/// Compares the analytic gradient of the total NLL over steps [1, T) of
/// `data` with central differences, entry by entry.
GradientCheckReport finite_diff_check(SequenceModel& model, const TrainingData& data,
                                      const GradientCheckOptions& options = {});

}  // namespace graphdf
