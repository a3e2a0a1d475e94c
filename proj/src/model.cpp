// SPDX-License-Identifier: Apache-2.0
#include "graphdf/model.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "graphdf/error.hpp"
#include "graphdf/io.hpp"

namespace graphdf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(CellKind kind) {
  switch (kind) {
    case CellKind::graph_gcrn: return "graph_gcrn";
    case CellKind::graph_dcgru: return "graph_dcgru";
    case CellKind::plain_rnn: return "plain_rnn";
  }
  return "unknown";
}

CellKind parse_cell_kind(const std::string& text) {
  if (text == "graph_gcrn" || text == "gcrn") return CellKind::graph_gcrn;
  if (text == "graph_dcgru" || text == "dcgru") return CellKind::graph_dcgru;
  if (text == "plain_rnn" || text == "plain" || text == "lstm") return CellKind::plain_rnn;
  fail(ErrorKind::InvalidValue, fmt::format("unknown cell kind '{}'", text));
}

VariantConfig VariantConfig::named(const std::string& variant, const std::string& cell) {
  const CellKind graph = parse_cell_kind(cell);
  if (graph == CellKind::plain_rnn) fail(ErrorKind::InvalidValue, "cell family must be gcrn or dcgru");
  VariantConfig cfg;
  std::string v = variant;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "gg") {
    cfg.global_kind = cfg.local_kind = graph;
  } else if (v == "gr") {
    cfg.global_kind = graph;
    cfg.local_kind = CellKind::plain_rnn;
  } else if (v == "rg") {
    cfg.global_kind = CellKind::plain_rnn;
    cfg.local_kind = graph;
  } else {
    fail(ErrorKind::InvalidValue, fmt::format("unknown variant '{}' (expected gg, gr or rg)", variant));
  }
  return cfg;
}

std::string VariantConfig::variant_name() const {
  const bool g = global_kind != CellKind::plain_rnn;
  const bool l = local_kind != CellKind::plain_rnn;
  if (g && l) return "gg";
  if (g) return "gr";
  if (l) return "rg";
  return "custom";
}

void VariantConfig::validate() const {
  if (k_factors < 1 || q_hidden < 1 || r_hidden < 1)
    fail(ErrorKind::InvalidValue, "k, q and r must all be >= 1");
  if (hops < 1) fail(ErrorKind::InvalidValue, "hops must be >= 1");
  if (cheb_order < 1) fail(ErrorKind::InvalidValue, "filter order must be >= 1");
}

nlohmann::json to_json(const VariantConfig& cfg) {
  return {{"global_kind", to_string(cfg.global_kind)},
          {"local_kind", to_string(cfg.local_kind)},
          {"k_factors", cfg.k_factors},
          {"q_hidden", cfg.q_hidden},
          {"r_hidden", cfg.r_hidden},
          {"hops", cfg.hops},
          {"cheb_order", cfg.cheb_order},
          {"share_local", cfg.share_local}};
}

VariantConfig variant_from_json(const nlohmann::json& j) {
  VariantConfig cfg;
  cfg.global_kind = parse_cell_kind(j.at("global_kind").get<std::string>());
  cfg.local_kind = parse_cell_kind(j.at("local_kind").get<std::string>());
  cfg.k_factors = j.at("k_factors").get<std::size_t>();
  cfg.q_hidden = j.at("q_hidden").get<std::size_t>();
  cfg.r_hidden = j.at("r_hidden").get<std::size_t>();
  cfg.hops = j.at("hops").get<std::size_t>();
  cfg.cheb_order = j.at("cheb_order").get<std::size_t>();
  cfg.share_local = j.value("share_local", false);
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------

NodeScaling NodeScaling::identity(std::size_t n) {
  const auto rows = static_cast<Eigen::Index>(n);
  return {VectorXd::Zero(rows), VectorXd::Ones(rows)};
}

NodeScaling NodeScaling::min_max(const MatrixXd& targets) {
  NodeScaling s;
  s.offset = targets.rowwise().minCoeff();
  s.range = targets.rowwise().maxCoeff() - s.offset;
  for (Eigen::Index i = 0; i < s.range.size(); ++i)
    if (!(s.range(i) > 0.0)) s.range(i) = 1.0;
  return s;
}

MatrixXd NodeScaling::scale(const MatrixXd& targets) const {
  require_shape(targets.rows() == offset.size(), "scaling: node count mismatch");
  return (targets.colwise() - offset).array().colwise() / range.array();
}

MatrixXd NodeScaling::unscale(const MatrixXd& scaled) const {
  require_shape(scaled.rows() == offset.size(), "scaling: node count mismatch");
  return (scaled.array().colwise() * range.array()).matrix().colwise() + offset;
}

// ---------------------------------------------------------------------------

std::unique_ptr<SequenceModel> zero_gradients(const SequenceModel& model) {
  auto g = model.clone();
  g->for_each_tensor([](const std::string&, MatrixXd& m) { m.setZero(); });
  return g;
}

std::size_t parameter_count(SequenceModel& model) {
  std::size_t n = 0;
  model.for_each_tensor([&](const std::string&, MatrixXd& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

double softplus(double x) {
  const double v = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  return std::max(v, DBL_MIN);
}

double softplus_derivative(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double fixed_effect(const MatrixXd& factors, const MatrixXd& embeddings, std::size_t node) {
  const auto i = static_cast<Eigen::Index>(node);
  require_shape(i < factors.rows() && i < embeddings.rows(), "fixed_effect: node out of range");
  require_shape(factors.cols() == embeddings.cols(), "fixed_effect: factor and embedding widths differ");
  return embeddings.row(i).dot(factors.row(i));
}

MatrixXd graph_signal(const TimeSeriesPanel& panel, std::size_t t) {
  if (t == 0) fail(ErrorKind::NoLag, "step 0 has no lagged target");
  require_shape(t < panel.num_steps(), fmt::format("step {} outside panel of {} steps", t, panel.num_steps()));
  MatrixXd y(panel.targets.rows(), static_cast<Eigen::Index>(1 + panel.num_covariates()));
  y.col(0) = panel.targets.col(static_cast<Eigen::Index>(t - 1));
  if (panel.num_covariates() > 0) y.rightCols(y.cols() - 1) = panel.covariates_at(t);
  return y;
}

MatrixXd local_input_signal(const TimeSeriesPanel& panel, const Neighborhood& neighborhood, std::size_t t) {
  const MatrixXd y = graph_signal(panel, t);
  MatrixXd out(static_cast<Eigen::Index>(neighborhood.indices.size()), y.cols());
  for (std::size_t r = 0; r < neighborhood.indices.size(); ++r) {
    const auto node = static_cast<Eigen::Index>(neighborhood.indices[r]);
    require_shape(node < y.rows(), "neighborhood index outside panel");
    out.row(static_cast<Eigen::Index>(r)) = y.row(node);
  }
  return out;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// GraphDFModel

namespace {

FilterFamily family_of(CellKind kind) {
  return kind == CellKind::graph_dcgru ? FilterFamily::diffusion : FilterFamily::chebyshev;
}

CellParams make_cell(CellKind kind, std::size_t inputs, std::size_t hidden, std::size_t order, std::size_t rows,
                     PeepholeMode peepholes, std::mt19937_64& rng) {
  switch (kind) {
    case CellKind::graph_gcrn: return init_gcrn_lstm(inputs, hidden, order, rows, peepholes, rng);
    case CellKind::graph_dcgru: return init_dcgru(inputs, hidden, order, rng);
    case CellKind::plain_rnn: return init_lstm(inputs, hidden, rng);
  }
  fail(ErrorKind::InvalidValue, "unknown cell kind");
}

void visit_cell(const std::string& prefix, CellParams& cell, const TensorVisitor& fn) {
  for_each_tensor(cell, [&](const std::string& name, MatrixXd& m) { fn(prefix + name, m); });
}

MatrixXd rows_of(const MatrixXd& y, const std::vector<std::size_t>& rows) {
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), y.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = y.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

std::vector<std::size_t> all_nodes(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

GraphDFModel::GraphDFModel(VariantConfig config, Graph graph, std::size_t num_covariates, NodeScaling scaling,
                           std::uint64_t seed)
    : config_(config), graph_(std::move(graph)), num_covariates_(num_covariates), scaling_(std::move(scaling)),
      seed_(seed) {
  config_.validate();
  graph_.validate();
  if (graph_.n == 0) fail(ErrorKind::InvalidValue, "graph has no nodes");
  require_shape(scaling_.size() == graph_.n, "scaling and graph disagree on node count");

  bundle_ = laplacian_bundle(graph_);
  const std::size_t n = graph_.n;
  const std::size_t inputs = 1 + num_covariates_;
  const std::size_t order = config_.cheb_order;

  if (config_.global_kind != CellKind::plain_rnn)
    global_filter_ = GraphFilter::from_bundle(family_of(config_.global_kind), bundle_);

  const auto adjacency = graph_.adjacency_lists();
  neighborhoods_.resize(n);
  local_filters_.resize(n);
  GraphFilter local_base;
  if (config_.local_kind != CellKind::plain_rnn)
    local_base = GraphFilter::from_bundle(family_of(config_.local_kind), bundle_);
  for (std::size_t i = 0; i < n; ++i) {
    if (config_.local_kind == CellKind::plain_rnn) {
      neighborhoods_[i] = {i};
      continue;
    }
    neighborhoods_[i] = node_neighborhood(bundle_, adjacency, i, config_.hops).indices;
    local_filters_[i] = local_base.restrict_to(neighborhoods_[i]);
  }

  std::mt19937_64 rng(seed);
  const auto k = static_cast<Eigen::Index>(config_.k_factors);
  const auto q = static_cast<Eigen::Index>(config_.q_hidden);
  const auto r = static_cast<Eigen::Index>(config_.r_hidden);
  params_.global_cell = make_cell(config_.global_kind, inputs, config_.q_hidden, order, n, PeepholeMode::per_node, rng);
  params_.factor_weight = xavier_uniform(q, k, rng);
  params_.factor_bias = MatrixXd::Zero(1, k);
  params_.embeddings = xavier_uniform(static_cast<Eigen::Index>(n), k, rng);
  const std::size_t local_count = config_.share_local ? 1 : n;
  for (std::size_t i = 0; i < local_count; ++i) {
    const auto mode = config_.share_local ? PeepholeMode::shared_row : PeepholeMode::per_node;
    params_.local_cells.push_back(
        make_cell(config_.local_kind, inputs, config_.r_hidden, order, neighborhoods_[i].size(), mode, rng));
  }
  params_.head_weight = xavier_uniform(static_cast<Eigen::Index>(local_count), r, rng);
  params_.head_bias = MatrixXd::Zero(static_cast<Eigen::Index>(local_count), 1);
}

std::unique_ptr<SequenceModel> GraphDFModel::clone() const { return std::make_unique<GraphDFModel>(*this); }

void GraphDFModel::set_scaling(NodeScaling scaling) {
  require_shape(scaling.size() == graph_.n, "scaling and graph disagree on node count");
  scaling_ = std::move(scaling);
}

const CellParams& GraphDFModel::local_cell(std::size_t node) const {
  return params_.local_cells[config_.share_local ? 0 : node];
}

CellParams& GraphDFModel::local_cell(std::size_t node) { return params_.local_cells[config_.share_local ? 0 : node]; }

ModelState GraphDFModel::initial_state() const {
  ModelState s;
  const Eigen::Index global_rows = config_.global_kind == CellKind::plain_rnn ? 1 : static_cast<Eigen::Index>(graph_.n);
  s.global = zero_state(params_.global_cell, global_rows);
  s.local.reserve(graph_.n);
  for (std::size_t i = 0; i < graph_.n; ++i)
    s.local.push_back(zero_state(local_cell(i), static_cast<Eigen::Index>(neighborhoods_[i].size())));
  return s;
}

MatrixXd GraphDFModel::global_factors(CellState& global_state, const MatrixXd& signal, CellCache* cache,
                                      MatrixXd* hidden) const {
  require_shape(static_cast<std::size_t>(signal.rows()) == graph_.n, "global signal must have one row per node");
  MatrixXd h;
  if (config_.global_kind == CellKind::plain_rnn) {
    const MatrixXd pooled = signal.colwise().mean();
    global_state = cell_step(params_.global_cell, global_filter_, global_state, pooled, cache);
    h = global_state.hidden.replicate(signal.rows(), 1);
  } else {
    global_state = cell_step(params_.global_cell, global_filter_, global_state, signal, cache);
    h = global_state.hidden;
  }
  MatrixXd s = h * params_.factor_weight;
  s.rowwise() += params_.factor_bias.row(0);
  if (hidden != nullptr) *hidden = std::move(h);
  return s;
}

double GraphDFModel::local_sigma(std::size_t node, CellState& local_state, const MatrixXd& local_signal,
                                 CellCache* cache, Eigen::RowVectorXd* hidden) const {
  require_shape(node < graph_.n, "local_sigma: node out of range");
  require_shape(static_cast<std::size_t>(local_signal.rows()) == neighborhoods_[node].size(),
                "local_sigma: signal rows differ from neighborhood size");
  local_state = cell_step(local_cell(node), local_filters_[node], local_state, local_signal, cache);
  const Eigen::RowVectorXd h = local_state.hidden.row(0);
  const auto row = static_cast<Eigen::Index>(head_row(node));
  const double pre = params_.head_weight.row(row).dot(h) + params_.head_bias(row, 0);
  if (!std::isfinite(pre)) fail(ErrorKind::NumericOverflow, fmt::format("non-finite sigma head at node {}", node));
  if (hidden != nullptr) *hidden = h;
  return softplus(pre);
}

StepOutput GraphDFModel::step(ModelState& state, const VectorXd& lag, const MatrixXd& covariates,
                              std::span<const std::size_t> active, StepTrace* trace) const {
  const auto n = static_cast<Eigen::Index>(graph_.n);
  require_shape(lag.size() == n, "lag must have one entry per node");
  require_shape(covariates.rows() == n && static_cast<std::size_t>(covariates.cols()) == num_covariates_,
                fmt::format("covariates must be {} x {}", n, num_covariates_));
  MatrixXd y(n, 1 + covariates.cols());
  y.col(0) = lag;
  y.rightCols(covariates.cols()) = covariates;

  std::vector<std::size_t> nodes(active.begin(), active.end());
  if (nodes.empty()) nodes = all_nodes(graph_.n);

  MatrixXd hidden;
  const MatrixXd factors =
      global_factors(state.global, y, trace != nullptr ? &trace->global_cache : nullptr, &hidden);

  StepOutput out;
  out.mean = (params_.embeddings.array() * factors.array()).rowwise().sum();
  out.sigma = VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());

  if (trace != nullptr) {
    trace->active = nodes;
    trace->global_hidden = hidden;
    trace->factors = factors;
    trace->local_caches.assign(graph_.n, CellCache{});
    trace->local_hidden = MatrixXd::Zero(n, static_cast<Eigen::Index>(config_.r_hidden));
    trace->head_pre = VectorXd::Zero(n);
  }
  auto local = [&](std::size_t j) {
    const std::size_t i = nodes[j];
    Eigen::RowVectorXd h;
    const double sigma = local_sigma(i, state.local[i], rows_of(y, neighborhoods_[i]),
                                     trace != nullptr ? &trace->local_caches[i] : nullptr, &h);
    out.sigma(static_cast<Eigen::Index>(i)) = sigma;
    if (trace != nullptr) {
      const auto row = static_cast<Eigen::Index>(head_row(i));
      trace->local_hidden.row(static_cast<Eigen::Index>(i)) = h;
      trace->head_pre(static_cast<Eigen::Index>(i)) = params_.head_weight.row(row).dot(h) + params_.head_bias(row, 0);
    }
  };
  parallel_for(nodes.size(), threads_, local);
  if (!out.mean.allFinite()) fail(ErrorKind::NumericOverflow, "non-finite fixed effect");
  return out;
}

void GraphDFModel::backward(const StepTrace& trace, const VectorXd& d_mean, const VectorXd& d_sigma,
                            ModelState& carry, SequenceModel& grads_base) const {
  auto& grads = dynamic_cast<GraphDFModel&>(grads_base);
  auto& g = grads.params_;

  // Fixed effect and projection.
  const MatrixXd d_factors = params_.embeddings.array().colwise() * d_mean.array();
  g.embeddings.array() += trace.factors.array().colwise() * d_mean.array();
  g.factor_weight.noalias() += trace.global_hidden.transpose() * d_factors;
  g.factor_bias.row(0) += d_factors.colwise().sum();

  MatrixXd d_hidden = d_factors * params_.factor_weight.transpose();
  if (config_.global_kind == CellKind::plain_rnn) d_hidden = d_hidden.colwise().sum().eval();
  CellState d_out{d_hidden + carry.global.hidden, carry.global.cell};
  CellState d_prev;
  cell_backward(params_.global_cell, global_filter_, trace.global_cache, d_out, g.global_cell, d_prev);
  carry.global = std::move(d_prev);

  // Local models. Per-node parameters receive disjoint gradients, so nodes
  // can run in parallel; a shared cell is accumulated in node order.
  auto local = [&](std::size_t j) {
    const std::size_t i = trace.active[j];
    const auto ii = static_cast<Eigen::Index>(i);
    const auto row = static_cast<Eigen::Index>(head_row(i));
    const double d_pre = d_sigma(ii) * softplus_derivative(trace.head_pre(ii));
    g.head_weight.row(row) += d_pre * trace.local_hidden.row(ii);
    g.head_bias(row, 0) += d_pre;
    CellState d_local = carry.local[i];
    d_local.hidden.row(0) += d_pre * params_.head_weight.row(row);
    CellState d_local_prev;
    cell_backward(local_cell(i), local_filters_[i], trace.local_caches[i], d_local,
                  grads.local_cell(i), d_local_prev);
    carry.local[i] = std::move(d_local_prev);
  };
  parallel_for(trace.active.size(), config_.share_local ? 1 : threads_, local);
}

void GraphDFModel::for_each_tensor(const TensorVisitor& fn) {
  visit_cell("global.", params_.global_cell, fn);
  fn("factor_weight", params_.factor_weight);
  fn("factor_bias", params_.factor_bias);
  fn("embeddings", params_.embeddings);
  for (std::size_t i = 0; i < params_.local_cells.size(); ++i)
    visit_cell(fmt::format("local{{{}}}.", i), params_.local_cells[i], fn);
  fn("head_weight", params_.head_weight);
  fn("head_bias", params_.head_bias);
}

nlohmann::json GraphDFModel::to_json() const {
  nlohmann::json j;
  j["format"] = "graphdf-checkpoint";
  j["version"] = 1;
  j["kind"] = kind();
  j["config"] = graphdf::to_json(config_);
  j["variant"] = config_.variant_name();
  j["num_covariates"] = num_covariates_;
  j["seed"] = seed_;
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : graph_.edges) edges.push_back({e.i, e.j, e.weight});
  j["graph"] = {{"n", graph_.n},
                {"edges", edges},
                {"keep_rule", graph_.provenance.keep_rule},
                {"source", graph_.provenance.source},
                {"length_scale", graph_.provenance.length_scale ? nlohmann::json(*graph_.provenance.length_scale)
                                                                : nlohmann::json()},
                {"graph_seed", graph_.provenance.seed ? nlohmann::json(*graph_.provenance.seed) : nlohmann::json()},
                {"lambda_max", bundle_.lambda_max}};
  j["scaling"] = {{"offset", std::vector<double>(scaling_.offset.data(), scaling_.offset.data() + scaling_.offset.size())},
                  {"range", std::vector<double>(scaling_.range.data(), scaling_.range.data() + scaling_.range.size())}};
  nlohmann::json tensors = nlohmann::json::object();
  const_cast<GraphDFModel*>(this)->for_each_tensor(
      [&](const std::string& name, MatrixXd& m) { tensors[name] = io::matrix_to_json(m); });
  j["tensors"] = std::move(tensors);
  return j;
}

GraphDFModel GraphDFModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "graphdf-checkpoint")
      fail(ErrorKind::InvalidValue, "not a graphdf checkpoint");
    if (j.at("version").get<int>() != 1) fail(ErrorKind::InvalidValue, "unsupported checkpoint version");
    const auto& gj = j.at("graph");
    Graph graph;
    graph.n = gj.at("n").get<std::size_t>();
    for (const auto& e : gj.at("edges"))
      graph.edges.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<double>()});
    graph.provenance.keep_rule = gj.value("keep_rule", std::string{});
    graph.provenance.source = gj.value("source", std::string{});
    if (gj.contains("length_scale") && !gj["length_scale"].is_null())
      graph.provenance.length_scale = gj["length_scale"].get<double>();
    if (gj.contains("graph_seed") && !gj["graph_seed"].is_null())
      graph.provenance.seed = gj["graph_seed"].get<std::uint64_t>();

    const auto offset = j.at("scaling").at("offset").get<std::vector<double>>();
    const auto range = j.at("scaling").at("range").get<std::vector<double>>();
    NodeScaling scaling{Eigen::Map<const VectorXd>(offset.data(), static_cast<Eigen::Index>(offset.size())),
                        Eigen::Map<const VectorXd>(range.data(), static_cast<Eigen::Index>(range.size()))};

    GraphDFModel model(variant_from_json(j.at("config")), std::move(graph), j.at("num_covariates").get<std::size_t>(),
                       std::move(scaling), j.at("seed").get<std::uint64_t>());
    const auto& tensors = j.at("tensors");
    model.for_each_tensor([&](const std::string& name, MatrixXd& m) {
      if (!tensors.contains(name)) fail(ErrorKind::InvalidValue, fmt::format("checkpoint lacks tensor {}", name));
      MatrixXd loaded = io::matrix_from_json(tensors.at(name));
      require_shape(loaded.rows() == m.rows() && loaded.cols() == m.cols(),
                    fmt::format("checkpoint tensor {} has shape {}x{}, expected {}x{}", name, loaded.rows(),
                                loaded.cols(), m.rows(), m.cols()));
      m = std::move(loaded);
    });
    return model;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidValue, fmt::format("malformed checkpoint: {}", e.what()));
  }
}

void GraphDFModel::save(const std::filesystem::path& path) const { io::write_atomic(path, to_json().dump()); }

GraphDFModel GraphDFModel::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidValue, fmt::format("{}: {}", path.string(), e.what()));
  }
  return from_json(j);
}

}  // namespace graphdf
