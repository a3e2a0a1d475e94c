// SPDX-License-Identifier: Apache-2.0
#include "graphdf/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <regex>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "graphdf/error.hpp"
#include "graphdf/io.hpp"
#include "graphdf/log.hpp"

namespace graphdf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !(min_lr > 0.0) || min_lr > lr)
    fail(ErrorKind::InvalidValue, fmt::format("need 0 < min_lr <= lr (lr={}, min_lr={})", lr, min_lr));
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) fail(ErrorKind::InvalidValue, "lr_decay must be in (0, 1]");
  if (patience < 1) fail(ErrorKind::InvalidValue, "patience must be >= 1");
  if (lookback < 2) fail(ErrorKind::InvalidValue, "lookback must be >= 2");
  if (epochs < 1) fail(ErrorKind::InvalidValue, "epochs must be >= 1");
  if (clip < 0.0) fail(ErrorKind::InvalidValue, "clip must be >= 0");
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"lr", cfg.lr},
          {"lr_decay", cfg.lr_decay},
          {"min_lr", cfg.min_lr},
          {"epochs", cfg.epochs},
          {"patience", cfg.patience},
          {"early_stop", cfg.early_stop},
          {"lookback", cfg.lookback},
          {"windows", cfg.windows},
          {"seed", cfg.seed},
          {"batch", cfg.batch},
          {"clip", cfg.clip},
          {"threads", cfg.threads}};
}

void merge_json(TrainConfig& cfg, const nlohmann::json& j) {
  cfg.lr = j.value("lr", cfg.lr);
  cfg.lr_decay = j.value("lr_decay", cfg.lr_decay);
  cfg.min_lr = j.value("min_lr", cfg.min_lr);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.patience = j.value("patience", cfg.patience);
  cfg.early_stop = j.value("early_stop", cfg.early_stop);
  cfg.lookback = j.value("lookback", cfg.lookback);
  cfg.windows = j.value("windows", cfg.windows);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.batch = j.value("batch", cfg.batch);
  cfg.clip = j.value("clip", cfg.clip);
  cfg.threads = j.value("threads", cfg.threads);
}

std::string to_string(StopReason reason) {
  return reason == StopReason::early_stop ? "EarlyStop" : "Completed";
}

nlohmann::json TrainReport::to_json() const {
  return {{"losses", losses},
          {"learning_rates", learning_rates},
          {"epoch_seconds", epoch_seconds},
          {"epochs_run", losses.size()},
          {"stop_reason", to_string(stop_reason)},
          {"best_epoch", best_epoch},
          {"best_loss", best_loss},
          {"parameters", parameters},
          {"checksum", checksum}};
}

double gaussian_nll(double z, double c, double sigma) {
  if (!(sigma > 0.0)) fail(ErrorKind::InvalidValue, fmt::format("sigma must be positive, got {}", sigma));
  const double r = (z - c) / sigma;
  return 0.5 * std::log(2.0 * std::numbers::pi * sigma * sigma) + 0.5 * r * r;
}

// ---------------------------------------------------------------------------

void adam_step(std::span<MatrixXd* const> params, std::span<const MatrixXd* const> grads, AdamState& state,
               double lr, const AdamConfig& cfg) {
  require_shape(params.size() == grads.size(), "adam_step: parameter and gradient lists differ");
  if (state.m.empty()) {
    for (auto* p : params) {
      state.m.push_back(MatrixXd::Zero(p->rows(), p->cols()));
      state.v.push_back(MatrixXd::Zero(p->rows(), p->cols()));
    }
  }
  require_shape(state.m.size() == params.size(), "adam_step: optimizer state does not match parameters");
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const MatrixXd& g = *grads[k];
    require_shape(g.rows() == params[k]->rows() && g.cols() == params[k]->cols(), "adam_step: shape mismatch");
    state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g;
    state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    params[k]->array() -= lr * (state.m[k].array() / c1) / ((state.v[k].array() / c2).sqrt() + cfg.epsilon);
  }
}

namespace {

std::vector<MatrixXd*> tensor_list(SequenceModel& model) {
  std::vector<MatrixXd*> out;
  model.for_each_tensor([&](const std::string&, MatrixXd& m) { out.push_back(&m); });
  return out;
}

}  // namespace

void adam_step(SequenceModel& model, SequenceModel& grads, AdamState& state, double lr, const AdamConfig& cfg) {
  const auto p = tensor_list(model);
  const auto g = tensor_list(grads);
  std::vector<const MatrixXd*> gc(g.begin(), g.end());
  adam_step(std::span<MatrixXd* const>(p), std::span<const MatrixXd* const>(gc), state, lr, cfg);
}

// ---------------------------------------------------------------------------

TrainingData TrainingData::from_panel(const TimeSeriesPanel& panel, const NodeScaling& scaling) {
  TrainingData d;
  d.targets = scaling.scale(panel.targets);
  d.covariates.reserve(panel.num_steps());
  for (std::size_t t = 0; t < panel.num_steps(); ++t) d.covariates.push_back(panel.covariates_at(t));
  return d;
}

WindowLoss window_loss(const SequenceModel& model, const TrainingData& data, std::size_t start, std::size_t length,
                       std::span<const std::size_t> nodes, SequenceModel* grads) {
  if (start < 1) fail(ErrorKind::NoLag, "training windows must start at step 1 or later");
  require_shape(start + length <= data.num_steps(), "window extends past the panel");
  require_shape(static_cast<std::size_t>(data.targets.rows()) == model.num_nodes(), "panel and model node counts differ");

  std::vector<std::size_t> active(nodes.begin(), nodes.end());
  if (active.empty()) {
    active.resize(model.num_nodes());
    std::iota(active.begin(), active.end(), std::size_t{0});
  }
  const auto n = static_cast<Eigen::Index>(model.num_nodes());

  ModelState state = model.initial_state();
  std::vector<StepTrace> traces(grads != nullptr ? length : 0);
  std::vector<VectorXd> d_mean, d_sigma;
  WindowLoss loss;
  for (std::size_t s = 0; s < length; ++s) {
    const std::size_t t = start + s;
    const auto tc = static_cast<Eigen::Index>(t);
    const StepOutput out = model.step(state, data.targets.col(tc - 1), data.covariates[t], active,
                                      grads != nullptr ? &traces[s] : nullptr);
    VectorXd dm = VectorXd::Zero(n), ds = VectorXd::Zero(n);
    for (auto i : active) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double z = data.targets(ii, tc), c = out.mean(ii), sigma = out.sigma(ii);
      loss.total += gaussian_nll(z, c, sigma);
      const double r = z - c;
      dm(ii) = -r / (sigma * sigma);
      ds(ii) = 1.0 / sigma - r * r / (sigma * sigma * sigma);
    }
    loss.count += active.size();
    if (grads != nullptr) {
      d_mean.push_back(std::move(dm));
      d_sigma.push_back(std::move(ds));
    }
  }
  if (grads != nullptr) {
    ModelState carry = model.initial_state();
    for (std::size_t s = length; s-- > 0;) model.backward(traces[s], d_mean[s], d_sigma[s], carry, *grads);
  }
  return loss;
}

std::vector<std::size_t> training_windows(std::size_t num_steps, std::size_t lookback, std::size_t windows,
                                          std::size_t offset) {
  std::vector<std::size_t> starts;
  if (lookback == 0 || offset >= num_steps) return starts;
  for (std::size_t end = num_steps - offset; end >= lookback + 1; end -= lookback) {
    starts.push_back(end - lookback);
    if (windows != 0 && starts.size() == windows) break;
  }
  std::reverse(starts.begin(), starts.end());
  return starts;
}

std::string parameter_checksum(SequenceModel& model) {
  std::string bytes;
  model.for_each_tensor([&](const std::string&, MatrixXd& m) {
    bytes.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
  });
  return io::git_blob_hash(bytes);
}

TrainReport train(SequenceModel& model, const TimeSeriesPanel& panel, const TrainConfig& cfg) {
  cfg.validate();
  if (panel.num_steps() < cfg.lookback + 1)
    fail(ErrorKind::MissingObservation, fmt::format("panel has {} steps; training needs at least lookback + 1 = {}",
                                                    panel.num_steps(), cfg.lookback + 1));
  require_shape(panel.num_nodes() == model.num_nodes(), "panel and model node counts differ");
  require_shape(panel.num_covariates() == model.num_covariates(), "panel and model covariate counts differ");

  model.set_threads(cfg.threads);
  model.set_scaling(NodeScaling::min_max(panel.targets));
  const TrainingData data = TrainingData::from_panel(panel, model.scaling());
  if (training_windows(panel.num_steps(), cfg.lookback, cfg.windows).empty())
    fail(ErrorKind::MissingObservation, "panel too short for one training window");
  const std::size_t n = model.num_nodes();
  const std::size_t batch = cfg.batch == 0 ? n : std::min(cfg.batch, n);

  TrainReport report;
  report.parameters = parameter_count(model);
  std::unique_ptr<SequenceModel> best = model.clone();
  std::unique_ptr<SequenceModel> grads = zero_gradients(model);
  AdamState adam;
  double lr = cfg.lr;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x7261696eULL));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    // When tiling the whole panel, shift the tiling each epoch so that window
    // boundaries do not always fall on the same phase of periodic patterns.
    std::size_t offset = 0;
    if (cfg.windows == 0) {
      const std::size_t spare = std::min(cfg.lookback, panel.num_steps() - cfg.lookback - 1);
      offset = std::uniform_int_distribution<std::size_t>(0, spare)(rng);
    }
    const auto windows = training_windows(panel.num_steps(), cfg.lookback, cfg.windows, offset);
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> nodes(n);
    std::iota(nodes.begin(), nodes.end(), std::size_t{0});
    if (batch < n) std::shuffle(nodes.begin(), nodes.end(), rng);

    double epoch_total = 0.0;
    std::size_t epoch_count = 0;
    for (auto w : order) {
      for (std::size_t b = 0; b < n; b += batch) {
        std::vector<std::size_t> members(nodes.begin() + static_cast<std::ptrdiff_t>(b),
                                         nodes.begin() + static_cast<std::ptrdiff_t>(std::min(n, b + batch)));
        std::sort(members.begin(), members.end());
        grads->for_each_tensor([](const std::string&, MatrixXd& m) { m.setZero(); });
        WindowLoss loss;
        try {
          loss = window_loss(model, data, windows[w], cfg.lookback, members, grads.get());
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::NumericOverflow) throw;
          fail(ErrorKind::NumericOverflow, fmt::format("epoch {}, node batch {}: {}", epoch, b / batch, e.what()));
        }
        if (!std::isfinite(loss.total))
          fail(ErrorKind::NumericOverflow, fmt::format("non-finite loss at epoch {}, node batch {}", epoch, b / batch));
        const double inv = 1.0 / static_cast<double>(loss.count);
        double norm2 = 0.0;
        grads->for_each_tensor([&](const std::string&, MatrixXd& m) {
          m *= inv;
          norm2 += m.squaredNorm();
        });
        if (cfg.clip > 0.0 && std::sqrt(norm2) > cfg.clip) {
          const double f = cfg.clip / std::sqrt(norm2);
          grads->for_each_tensor([&](const std::string&, MatrixXd& m) { m *= f; });
        }
        adam_step(model, *grads, adam, lr);
        epoch_total += loss.total;
        epoch_count += loss.count;
      }
    }
    const double epoch_loss = epoch_total / static_cast<double>(epoch_count);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.losses.push_back(epoch_loss);
    report.learning_rates.push_back(lr);
    report.epoch_seconds.push_back(seconds);
    if (cfg.progress) fmt::print(stderr, "{},{:.6f},{:.6g},{:.3f}\n", epoch, epoch_loss, lr, seconds);
    logger().debug("epoch {} loss {} lr {}", epoch, epoch_loss, lr);

    if (epoch_loss < best_loss) {
      best_loss = epoch_loss;
      report.best_epoch = epoch;
      best = model.clone();
      stale = 0;
    } else {
      ++stale;
      lr = std::max(lr * cfg.lr_decay, cfg.min_lr);
      if (cfg.early_stop && stale >= cfg.patience) {
        report.stop_reason = StopReason::early_stop;
        break;
      }
    }
  }
  // Restore the best epoch's parameters.
  auto dst = tensor_list(model);
  auto src = tensor_list(*best);
  for (std::size_t k = 0; k < dst.size(); ++k) *dst[k] = *src[k];
  report.best_loss = best_loss;
  report.checksum = parameter_checksum(model);
  return report;
}

std::pair<GraphDFModel, TrainReport> train_graphdf(const VariantConfig& variant, const TimeSeriesPanel& panel,
                                                   const Graph& graph, const TrainConfig& cfg) {
  require_shape(graph.n == panel.num_nodes(), "graph and panel node counts differ");
  GraphDFModel model(variant, graph, panel.num_covariates(), NodeScaling::identity(graph.n), cfg.seed);
  TrainReport report = train(model, panel, cfg);
  return {std::move(model), std::move(report)};
}

// ---------------------------------------------------------------------------

nlohmann::json GradientCheckReport::to_json() const {
  nlohmann::json g = nlohmann::json::object();
  for (const auto& [name, group] : groups)
    g[name] = {{"max_relative_error", group.max_relative_error},
               {"entries", group.entries},
               {"worst_entry", group.worst_entry}};
  return {{"max_relative_error", max_relative_error}, {"groups", g}};
}

GradientCheckReport finite_diff_check(SequenceModel& model, const TrainingData& data,
                                      const GradientCheckOptions& options) {
  require_shape(data.num_steps() >= 2, "gradient check needs at least two steps");
  const std::size_t length = data.num_steps() - 1;
  auto grads = zero_gradients(model);
  window_loss(model, data, 1, length, {}, grads.get());

  std::vector<std::pair<std::string, MatrixXd*>> params, analytic;
  model.for_each_tensor([&](const std::string& name, MatrixXd& m) { params.emplace_back(name, &m); });
  grads->for_each_tensor([&](const std::string& name, MatrixXd& m) { analytic.emplace_back(name, &m); });

  static const std::regex node_index(R"(\{\d+\})");
  GradientCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& [name, p] = params[k];
    const std::string group = std::regex_replace(name, node_index, "");
    auto& entry = report.groups[group];
    for (Eigen::Index idx = 0; idx < p->size(); ++idx) {
      double& x = p->data()[idx];
      const double saved = x;
      x = saved + options.step;
      const double plus = window_loss(model, data, 1, length).total;
      x = saved - options.step;
      const double minus = window_loss(model, data, 1, length).total;
      x = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic[k].second->data()[idx] * options.corrupt_scale;
      const double err = std::abs(a - numeric) / std::max(std::abs(numeric), options.floor);
      ++entry.entries;
      if (entry.worst_entry.empty() || err > entry.max_relative_error) {
        entry.max_relative_error = err;
        entry.worst_entry = fmt::format("{}[{}]", name, idx);
      }
      report.max_relative_error = std::max(report.max_relative_error, err);
    }
  }
  return report;
}

}  // namespace graphdf
