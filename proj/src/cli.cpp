// SPDX-License-Identifier: Apache-2.0
#include "graphdf/cli.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "graphdf/bench.hpp"
#include "graphdf/evaluation.hpp"
#include "graphdf/graph.hpp"
#include "graphdf/io.hpp"
#include "graphdf/log.hpp"
#include "graphdf/model.hpp"
#include "graphdf/panel.hpp"
#include "graphdf/scheduler.hpp"
#include "graphdf/training.hpp"

namespace graphdf {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorKind kind) {
  return kind == ErrorKind::NumericOverflow ? kExitNumeric : kExitData;
}

namespace {

template <typename T>
struct is_vector : std::false_type {};
template <typename T>
struct is_vector<std::vector<T>> : std::true_type {};

// Options that can also come from a JSON config file. A value given on the
// command line wins over the file, which wins over the built-in default.
class Settings {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& flag, T& var, const std::string& help) {
    CLI::Option* opt = app->add_option(flag, var, help)->capture_default_str();
    if constexpr (is_vector<T>::value) opt->delimiter(',');
    std::string key = flag.substr(flag.find_first_not_of('-'));
    std::replace(key.begin(), key.end(), '-', '_');
    entries_.push_back({opt, key, [&var](const json& j) { var = j.get<T>(); }, [&var] { return json(var); }});
    return opt;
  }

  void apply(const json& config) {
    for (auto& e : entries_)
      if (e.option->count() == 0 && config.contains(e.key)) {
        try {
          e.set(config.at(e.key));
        } catch (const json::exception& ex) {
          fail(ErrorKind::InvalidValue, fmt::format("config key '{}': {}", e.key, ex.what()));
        }
      }
  }

  json resolved() const {
    json out = json::object();
    for (const auto& e : entries_) out[e.key] = e.get();
    return out;
  }

 private:
  struct Entry {
    CLI::Option* option;
    std::string key;
    std::function<void(const json&)> set;
    std::function<json()> get;
  };
  std::vector<Entry> entries_;
};

struct Manifest {
  std::string command;
  json config;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, blob hash
  std::vector<std::string> outputs;

  void input(const fs::path& p) {
    if (p.empty() || !fs::exists(p)) return;
    inputs.emplace_back(p.string(), io::git_blob_hash(io::read_file(p)));
  }
  void output(const fs::path& p) { outputs.push_back(p.string()); }

  void write(const fs::path& dir, double seconds) const {
    json in = json::array();
    for (const auto& [path, hash] : inputs) in.push_back({{"path", path}, {"blob", hash}});
    const json j{{"command", command}, {"config", config},   {"seed", seed},
                 {"inputs", in},       {"outputs", outputs}, {"wall_clock_seconds", seconds}};
    io::write_atomic(dir / (command + ".manifest.json"), j.dump(2) + "\n");
  }
};

struct PanelSource {
  std::string path;
  std::int64_t period = 300;
  std::size_t covariates = 5;
  std::string unit = "fraction";

  void add_flags(Settings& s, CLI::App* app, bool required) {
    auto* opt = s.add(app, "--panel", path, "Panel JSON or node_id,timestamp,usage CSV trace");
    if (required) opt->required();
    s.add(app, "--period", period, "Sampling period of a CSV trace in seconds");
    s.add(app, "--covariates", covariates, "Calendar covariates derived for a CSV trace (1-5)");
    s.add(app, "--unit", unit, "Usage unit of a CSV trace: fraction or percent");
  }

  TimeSeriesPanel load() const {
    const fs::path p(path);
    if (p.extension() == ".json") return load_panel(p);
    TraceOptions opt;
    opt.period_seconds = period;
    opt.covariates = covariates;
    if (unit == "percent")
      opt.unit = UsageUnit::percent;
    else if (unit != "fraction")
      fail(ErrorKind::InvalidValue, fmt::format("unknown unit '{}'", unit));
    return load_trace(p, opt);
  }
};

TimeSeriesPanel drop_tail(const TimeSeriesPanel& panel, std::size_t holdout) {
  if (holdout == 0) return panel;
  if (holdout >= panel.num_steps())
    fail(ErrorKind::MissingObservation,
         fmt::format("holdout of {} steps leaves nothing of a {}-step panel", holdout, panel.num_steps()));
  return panel.slice(0, panel.num_steps() - holdout);
}

struct ModelFlags {
  std::string variant = "gg";
  std::string cell = "gcrn";
  std::size_t k = 10, q = 50, r = 5, hops = 1, cheb_order = 1;
  bool share_local = false;

  void add_flags(Settings& s, CLI::App* app) {
    s.add(app, "--variant", variant, "Model variant: gg, gr or rg");
    s.add(app, "--cell", cell, "Graph cell family: gcrn or dcgru");
    s.add(app, "--k", k, "Number of global factors");
    s.add(app, "--q", q, "Hidden units of the global model");
    s.add(app, "--r", r, "Hidden units of each local model");
    s.add(app, "--hops", hops, "Neighborhood radius of the local models");
    s.add(app, "--cheb-order", cheb_order, "Filter order (number of polynomial terms)");
    s.add(app, "--share-local", share_local, "One local model for all nodes");
  }

  VariantConfig resolve() const {
    VariantConfig v = VariantConfig::named(variant, cell);
    v.k_factors = k;
    v.q_hidden = q;
    v.r_hidden = r;
    v.hops = hops;
    v.cheb_order = cheb_order;
    v.share_local = share_local;
    v.validate();
    return v;
  }
};

struct TrainFlags {
  TrainConfig cfg;
  void add_flags(Settings& s, CLI::App* app) {
    s.add(app, "--lookback", cfg.lookback, "Training window length");
    s.add(app, "--epochs", cfg.epochs, "Maximum epochs");
    s.add(app, "--lr", cfg.lr, "Initial learning rate");
    s.add(app, "--lr-decay", cfg.lr_decay, "Learning-rate decay factor");
    s.add(app, "--min-lr", cfg.min_lr, "Learning-rate floor");
    s.add(app, "--patience", cfg.patience, "Non-improving epochs before stopping");
    s.add(app, "--windows", cfg.windows, "Training windows taken from the end (0 = all)");
    s.add(app, "--batch", cfg.batch, "Nodes per optimizer step (0 = all)");
    s.add(app, "--clip", cfg.clip, "Gradient-norm clip (0 = off)");
  }
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, fmt::format("cannot create {}: {}", dir.string(), ec.message()));
}

std::string quantile_csv(const ForecastDistribution& dist, const TimeSeriesPanel& history) {
  const Eigen::MatrixXd p10 = rho_quantile(dist, 0.1), p50 = rho_quantile(dist, 0.5), p90 = rho_quantile(dist, 0.9);
  std::string csv = "node,step,timestamp,p10,p50,p90\n";
  for (Eigen::Index i = 0; i < p50.rows(); ++i)
    for (Eigen::Index h = 0; h < p50.cols(); ++h)
      csv += fmt::format("{},{},{},{},{},{}\n", history.node_ids[static_cast<std::size_t>(i)], h + 1,
                         dist.base_timestamp + h * history.period_seconds, p10(i, h), p50(i, h), p90(i, h));
  return csv;
}

}  // namespace

int run_command(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(args);
}

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"Graph-based probabilistic forecasting of node workloads", "graphdf"};
  app.require_subcommand(1);
  std::string out_dir, config_path;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  // Each subcommand owns a Settings registry so that --config only fills the
  // options of the command that runs.
  std::map<std::string, Settings> settings;
  auto common = [&](CLI::App* sub) {
    Settings& s = settings[sub->get_name()];
    s.add(sub, "--out", out_dir, "Output directory")->required();
    s.add(sub, "--seed", seed, "Seed for all randomness");
    s.add(sub, "--threads", threads, "Worker threads");
    sub->add_option("--config", config_path, "JSON file with option defaults");
    return std::ref(s);
  };

  // synth
  SynthConfig synth_cfg;
  auto* synth = app.add_subcommand("synth", "Generate a community-structured synthetic panel and its graph");
  {
    Settings& s = common(synth);
    s.add(synth, "--nodes", synth_cfg.n_nodes, "Number of nodes");
    s.add(synth, "--steps", synth_cfg.n_steps, "Number of time steps");
    s.add(synth, "--communities", synth_cfg.n_communities, "Number of communities");
    s.add(synth, "--cycle", synth_cfg.factor_period_steps, "Steps per sinusoid cycle");
    s.add(synth, "--noise", synth_cfg.noise_sigma, "Noise standard deviation");
    s.add(synth, "--period", synth_cfg.period_seconds, "Seconds between steps");
  }

  // build-graph
  PanelSource bg_panel;
  std::string keep = "topk:5";
  double length_scale = 0.0;
  std::size_t bg_holdout = 0;
  auto* build = app.add_subcommand("build-graph", "Build an RBF similarity graph from a panel");
  {
    Settings& s = common(build);
    bg_panel.add_flags(s, build, true);
    s.add(build, "--keep", keep, "Sparsification rule: topk:<k> or threshold:<theta>");
    s.add(build, "--length-scale", length_scale, "RBF length scale (0 = median pairwise distance)");
    s.add(build, "--holdout", bg_holdout, "Ignore this many trailing steps");
  }

  // train
  PanelSource tr_panel;
  std::string tr_graph;
  ModelFlags tr_model;
  TrainFlags tr_train;
  std::size_t tr_holdout = 0;
  auto* train_cmd = app.add_subcommand("train", "Fit a GraphDF model");
  {
    Settings& s = common(train_cmd);
    tr_panel.add_flags(s, train_cmd, true);
    s.add(train_cmd, "--graph", tr_graph, "Graph edge-list CSV")->required();
    tr_model.add_flags(s, train_cmd);
    tr_train.add_flags(s, train_cmd);
    s.add(train_cmd, "--holdout", tr_holdout, "Train on all but this many trailing steps");
  }

  // forecast
  PanelSource fc_panel;
  std::string fc_checkpoint;
  std::size_t fc_tau = 3, fc_samples = 100, fc_lookback = 6, fc_holdout = 0;
  double fc_sigma_scale = 1.0;
  auto* forecast = app.add_subcommand("forecast", "Sample forecast paths from a checkpoint");
  {
    Settings& s = common(forecast);
    fc_panel.add_flags(s, forecast, true);
    s.add(forecast, "--checkpoint", fc_checkpoint, "Model checkpoint JSON")->required();
    s.add(forecast, "--tau", fc_tau, "Forecast horizon");
    s.add(forecast, "--samples", fc_samples, "Sample paths");
    s.add(forecast, "--lookback", fc_lookback, "Warm-up window length");
    s.add(forecast, "--holdout", fc_holdout, "Forecast from this many steps before the panel end");
    s.add(forecast, "--sigma-scale", fc_sigma_scale, "Multiplier on the predicted scale (0 = deterministic)");
  }

  // evaluate
  PanelSource ev_panel;
  std::string ev_forecast, ev_checkpoint;
  std::vector<double> ev_rho{0.5, 0.9};
  std::size_t ev_tau = 0, ev_samples = 100, ev_lookback = 6, ev_test_steps = 0;
  std::vector<std::size_t> ev_taus{1, 3, 4, 5};
  auto* evaluate = app.add_subcommand("evaluate", "Quantile-loss evaluation");
  {
    Settings& s = common(evaluate);
    ev_panel.add_flags(s, evaluate, true);
    s.add(evaluate, "--forecast", ev_forecast, "Forecast JSON to score against the panel");
    s.add(evaluate, "--checkpoint", ev_checkpoint, "Checkpoint for a rolling-origin backtest");
    s.add(evaluate, "--rho", ev_rho, "Quantile levels");
    s.add(evaluate, "--tau", ev_tau, "Score the first tau forecast steps (0 = all)");
    s.add(evaluate, "--taus", ev_taus, "Backtest horizons");
    s.add(evaluate, "--samples", ev_samples, "Backtest sample paths");
    s.add(evaluate, "--lookback", ev_lookback, "Backtest warm-up window");
    s.add(evaluate, "--test-steps", ev_test_steps, "Backtest over this many trailing steps");
  }

  // schedule
  PanelSource sc_panel;
  std::string sc_graph, sc_forecaster = "graphdf";
  ModelFlags sc_model;
  TrainFlags sc_train;
  SchedulerConfig sc_cfg;
  double sc_deadline = 0.0;
  std::size_t sc_samples = 100;
  auto* schedule = app.add_subcommand("schedule", "Replay a trace through the opportunistic scheduler");
  {
    Settings& s = common(schedule);
    sc_panel.add_flags(s, schedule, true);
    s.add(schedule, "--graph", sc_graph, "Graph edge-list CSV (GraphDF forecaster)");
    s.add(schedule, "--forecaster", sc_forecaster, "graphdf or oracle");
    sc_model.add_flags(s, schedule);
    sc_train.add_flags(s, schedule);
    s.add(schedule, "--tau", sc_cfg.horizon, "Forecast horizon");
    s.add(schedule, "--epsilon", sc_cfg.epsilon, "Usage threshold for placement");
    s.add(schedule, "--lambda", sc_cfg.lambda, "Portion of free capacity a batch job claims");
    s.add(schedule, "--retrain-every", sc_cfg.retrain_every, "Steps between refits");
    s.add(schedule, "--deadline", sc_deadline, "Per-step budget in seconds (0 = panel period)");
    s.add(schedule, "--samples", sc_samples, "Sample paths per forecast");
  }

  // gradcheck
  std::string gc_variant = "gg", gc_cell = "gcrn";
  std::size_t gc_nodes = 4, gc_steps = 8, gc_k = 3, gc_q = 4, gc_r = 3, gc_order = 2;
  double gc_step = 1e-5, gc_tolerance = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic gradients with finite differences");
  {
    Settings& s = common(gradcheck);
    s.add(gradcheck, "--variant", gc_variant, "Model variant: gg, gr or rg");
    s.add(gradcheck, "--cell", gc_cell, "Graph cell family: gcrn or dcgru");
    s.add(gradcheck, "--nodes", gc_nodes, "Nodes");
    s.add(gradcheck, "--steps", gc_steps, "Time steps");
    s.add(gradcheck, "--k", gc_k, "Global factors");
    s.add(gradcheck, "--q", gc_q, "Global hidden units");
    s.add(gradcheck, "--r", gc_r, "Local hidden units");
    s.add(gradcheck, "--cheb-order", gc_order, "Filter order");
    s.add(gradcheck, "--step", gc_step, "Central-difference step");
    s.add(gradcheck, "--tolerance", gc_tolerance, "Maximum relative error");
  }

  // bench
  PanelSource bn_panel;
  std::string bn_graph;
  ModelFlags bn_model;
  BenchConfig bn_cfg;
  auto* bench = app.add_subcommand("bench", "Training wall-clock against window length");
  {
    Settings& s = common(bench);
    bn_panel.add_flags(s, bench, false);
    s.add(bench, "--graph", bn_graph, "Graph edge-list CSV (synthesized with the panel when omitted)");
    bn_model.add_flags(s, bench);
    s.add(bench, "--sizes", bn_cfg.sizes, "Window lengths");
    s.add(bench, "--repeats", bn_cfg.repeats, "Repeats per size (median reported)");
    s.add(bench, "--epochs", bn_cfg.epochs, "Epochs per run");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  const auto started = std::chrono::steady_clock::now();
  try {
    Settings& s = settings.at(command);
    Manifest manifest;
    manifest.command = command;
    if (!config_path.empty()) {
      manifest.input(config_path);
      json cfg;
      try {
        cfg = json::parse(io::read_file(config_path));
      } catch (const json::exception& e) {
        fail(ErrorKind::InvalidValue, fmt::format("{}: {}", config_path, e.what()));
      }
      s.apply(cfg);
    }
    manifest.config = s.resolved();
    manifest.seed = seed;
    const fs::path out(out_dir);
    ensure_dir(out);
    int status = kExitOk;

    if (command == "synth") {
      synth_cfg.seed = seed;
      auto [panel, graph] = synth_panel(synth_cfg);
      save_panel(panel, out / "panel.json");
      save_trace(panel, out / "trace.csv");
      save_graph(graph, out / "graph.csv");
      for (const char* f : {"panel.json", "trace.csv", "graph.csv", "graph.csv.json"}) manifest.output(out / f);
    } else if (command == "build-graph") {
      manifest.input(bg_panel.path);
      const TimeSeriesPanel panel = drop_tail(bg_panel.load(), bg_holdout);
      const double ell = length_scale > 0.0 ? length_scale : median_length_scale(panel.targets, seed);
      Graph graph = build_rbf_graph(panel, ell, KeepRule::parse(keep));
      graph.provenance.seed = seed;
      save_graph(graph, out / "graph.csv");
      manifest.output(out / "graph.csv");
      manifest.output(out / "graph.csv.json");
    } else if (command == "train") {
      manifest.input(tr_panel.path);
      manifest.input(tr_graph);
      const TimeSeriesPanel panel = drop_tail(tr_panel.load(), tr_holdout);
      const Graph graph = load_graph(tr_graph);
      TrainConfig cfg = tr_train.cfg;
      cfg.seed = seed;
      cfg.threads = threads;
      cfg.progress = true;
      auto [model, report] = train_graphdf(tr_model.resolve(), panel, graph, cfg);
      model.save(out / "checkpoint.json");
      io::write_atomic(out / "train_report.json", report.to_json().dump(2) + "\n");
      manifest.output(out / "checkpoint.json");
      manifest.output(out / "train_report.json");
    } else if (command == "forecast") {
      manifest.input(fc_panel.path);
      manifest.input(fc_checkpoint);
      const TimeSeriesPanel full = fc_panel.load();
      const TimeSeriesPanel history = drop_tail(full, fc_holdout);
      GraphDFModel model = GraphDFModel::load(fc_checkpoint);
      model.set_threads(threads);
      std::vector<Eigen::MatrixXd> future;
      for (std::size_t h = 0; h < fc_tau && history.num_steps() + h < full.num_steps(); ++h)
        future.push_back(full.covariates_at(history.num_steps() + h));
      if (future.size() < fc_tau) {
        const auto ext = future_covariates(history, fc_tau);
        for (std::size_t h = future.size(); h < fc_tau; ++h) future.push_back(ext[h]);
      }
      ForecastOptions opt{fc_samples, seed, fc_lookback, fc_sigma_scale};
      const ForecastDistribution dist = forecast_samples(model, history, fc_tau, opt, &future);
      io::write_atomic(out / "forecast.json", dist.to_json(history.node_ids).dump() + "\n");
      io::write_atomic(out / "forecast_quantiles.csv", quantile_csv(dist, history));
      manifest.output(out / "forecast.json");
      manifest.output(out / "forecast_quantiles.csv");
    } else if (command == "evaluate") {
      manifest.input(ev_panel.path);
      const TimeSeriesPanel panel = ev_panel.load();
      EvaluationReport report;
      if (!ev_forecast.empty()) {
        manifest.input(ev_forecast);
        ForecastDistribution dist = ForecastDistribution::from_json(json::parse(io::read_file(ev_forecast)));
        if (ev_tau > 0) {
          if (ev_tau > dist.horizon)
            fail(ErrorKind::InvalidValue, fmt::format("tau {} exceeds the forecast horizon {}", ev_tau, dist.horizon));
          for (auto& m : dist.samples) m = m.leftCols(static_cast<Eigen::Index>(ev_tau)).eval();
          dist.horizon = ev_tau;
        }
        const auto it = std::find(panel.timestamps.begin(), panel.timestamps.end(), dist.base_timestamp);
        if (it == panel.timestamps.end())
          fail(ErrorKind::MissingObservation, "panel does not contain the forecast's first step");
        const auto first = static_cast<std::size_t>(it - panel.timestamps.begin());
        if (first + dist.horizon > panel.num_steps())
          fail(ErrorKind::MissingObservation, "panel ends before the forecast horizon");
        const Eigen::MatrixXd actual = panel.targets.middleCols(static_cast<Eigen::Index>(first),
                                                                static_cast<Eigen::Index>(dist.horizon));
        report = evaluate_forecast(dist, actual, ev_rho, panel.node_ids);
      } else if (!ev_checkpoint.empty()) {
        manifest.input(ev_checkpoint);
        GraphDFModel model = GraphDFModel::load(ev_checkpoint);
        model.set_threads(threads);
        const std::size_t max_tau = *std::max_element(ev_taus.begin(), ev_taus.end());
        const std::size_t test = ev_test_steps > 0 ? ev_test_steps : max_tau;
        if (test > panel.num_steps() || test < max_tau)
          fail(ErrorKind::InvalidValue, "test window must cover the longest horizon and fit in the panel");
        std::vector<std::size_t> origins;
        for (std::size_t t0 = panel.num_steps() - test; t0 + max_tau <= panel.num_steps(); ++t0) origins.push_back(t0);
        report = backtest(model, panel, origins, ev_taus, ev_rho, ForecastOptions{ev_samples, seed, ev_lookback, 1.0});
      } else {
        fail(ErrorKind::InvalidValue, "evaluate needs --forecast or --checkpoint");
      }
      io::write_atomic(out / "eval_report.json", report.to_json().dump(2) + "\n");
      io::write_atomic(out / "eval_nodes.csv", report.per_node_csv());
      manifest.output(out / "eval_report.json");
      manifest.output(out / "eval_nodes.csv");
    } else if (command == "schedule") {
      manifest.input(sc_panel.path);
      const TimeSeriesPanel panel = sc_panel.load();
      SchedulerConfig cfg = sc_cfg;
      cfg.lookback = sc_train.cfg.lookback;
      if (sc_deadline > 0.0) cfg.deadline_seconds = sc_deadline;
      std::unique_ptr<Forecaster> forecaster;
      if (sc_forecaster == "oracle") {
        forecaster = std::make_unique<OracleForecaster>(panel);
      } else if (sc_forecaster == "graphdf") {
        if (sc_graph.empty()) fail(ErrorKind::InvalidValue, "the graphdf forecaster needs --graph");
        manifest.input(sc_graph);
        TrainConfig tc = sc_train.cfg;
        tc.windows = 1;
        tc.seed = seed;
        tc.threads = threads;
        forecaster = std::make_unique<GraphDFForecaster>(sc_model.resolve(), load_graph(sc_graph), tc,
                                                         ForecastOptions{sc_samples, seed, tc.lookback, 1.0});
      } else {
        fail(ErrorKind::InvalidValue, fmt::format("unknown forecaster '{}'", sc_forecaster));
      }
      const ScheduleReport report = run_schedule_sim(*forecaster, panel, cfg);
      const ScheduleMetrics metrics = schedule_metrics(report, baseline_utilization(panel, report));
      io::write_atomic(out / "schedule.csv", report.to_csv());
      io::write_atomic(out / "schedule_summary.json", summary_json(report, metrics).dump(2) + "\n");
      manifest.output(out / "schedule.csv");
      manifest.output(out / "schedule_summary.json");
    } else if (command == "gradcheck") {
      VariantConfig v = VariantConfig::named(gc_variant, gc_cell);
      v.k_factors = gc_k;
      v.q_hidden = gc_q;
      v.r_hidden = gc_r;
      v.cheb_order = gc_order;
      SynthConfig sc;
      sc.n_nodes = gc_nodes;
      sc.n_steps = gc_steps;
      sc.n_communities = 1;
      sc.seed = seed;
      const TimeSeriesPanel panel = synth_panel(sc).first;
      GraphDFModel model(v, random_graph(gc_nodes, 0.6, seed), panel.num_covariates(),
                         NodeScaling::identity(gc_nodes), seed);
      const GradientCheckReport report =
          finite_diff_check(model, TrainingData::from_panel(panel, model.scaling()), {gc_step, 1e-4, 1.0});
      json j = report.to_json();
      j["tolerance"] = gc_tolerance;
      j["passed"] = report.passed(gc_tolerance);
      io::write_atomic(out / "gradcheck.json", j.dump(2) + "\n");
      manifest.output(out / "gradcheck.json");
      fmt::print("max relative error {:.3e} ({})\n", report.max_relative_error,
                 report.passed(gc_tolerance) ? "pass" : "FAIL");
      if (!report.passed(gc_tolerance)) status = kExitNumeric;
    } else if (command == "bench") {
      TimeSeriesPanel panel;
      Graph graph;
      if (bn_panel.path.empty()) {
        SynthConfig sc;
        sc.seed = seed;
        std::tie(panel, graph) = synth_panel(sc);
      } else {
        manifest.input(bn_panel.path);
        panel = bn_panel.load();
        if (bn_graph.empty()) fail(ErrorKind::InvalidValue, "--graph is required with --panel");
        manifest.input(bn_graph);
        graph = load_graph(bn_graph);
      }
      TrainConfig tc;
      tc.seed = seed;
      tc.threads = threads;
      const auto rows = scalability_bench(bn_model.resolve(), panel, graph, tc, bn_cfg);
      io::write_atomic(out / "bench.csv", bench_csv(rows));
      json j{{"slope", log_log_slope(rows)}};
      io::write_atomic(out / "bench.json", j.dump(2) + "\n");
      manifest.output(out / "bench.csv");
      manifest.output(out / "bench.json");
      fmt::print("{}log-log slope {:.3f}\n", bench_csv(rows), log_log_slope(rows));
    }

    manifest.write(out, std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
    return status;
  } catch (const Error& e) {
    logger().error("{}", e.what());
    fmt::print(stderr, "graphdf {}: {}\n", command, e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    fmt::print(stderr, "graphdf {}: {}\n", command, e.what());
    return kExitData;
  }
}

}  // namespace graphdf
