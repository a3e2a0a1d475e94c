// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "graphdf/graph.hpp"

namespace graphdf {

/// N node series over T equally spaced steps, each with D covariate series.
struct TimeSeriesPanel {
  std::vector<std::string> node_ids;
  Eigen::MatrixXd targets;                  // N x T
  std::vector<Eigen::MatrixXd> covariates;  // D entries, each N x T
  std::vector<std::int64_t> timestamps;     // epoch seconds, T entries
  std::int64_t period_seconds = 300;

  std::size_t num_nodes() const { return static_cast<std::size_t>(targets.rows()); }
  std::size_t num_steps() const { return static_cast<std::size_t>(targets.cols()); }
  std::size_t num_covariates() const { return covariates.size(); }

  /// N x D covariate block at step t.
  Eigen::MatrixXd covariates_at(std::size_t t) const;

  /// Columns [begin, end). Covariates are copied as-is, not recomputed.
  TimeSeriesPanel slice(std::size_t begin, std::size_t end) const;

  /// Throws on shape mismatch (ShapeError), non-finite or negative targets
  /// (InvalidValue) and non-uniform timestamps (IrregularGrid).
  void validate() const;
};

/// The five calendar/position features, in order: minute-of-hour/59,
/// hour-of-day/23, day-of-week/6 (Monday = 0), (day-of-month - 1)/30 and
/// t/(T-1). `position` must already be normalized to [0, 1].
Eigen::VectorXd time_features(std::int64_t timestamp, double position, std::size_t d = 5);

/// D x T block of `time_features` over a timestamp grid. Throws InvalidValue
/// unless 1 <= d <= 5.
Eigen::MatrixXd make_time_covariates(const std::vector<std::int64_t>& timestamps, std::size_t d = 5);

/// Replicates a D x T block into the per-node covariate tensor.
std::vector<Eigen::MatrixXd> replicate_covariates(const Eigen::MatrixXd& block, std::size_t n_nodes);

/// Parses integer epoch seconds or ISO-8601 "YYYY-MM-DD[T ]HH:MM[:SS][Z|+HH:MM]".
std::int64_t parse_timestamp(std::string_view text);
std::string format_timestamp(std::int64_t epoch_seconds);

enum class UsageUnit { fraction, percent };

struct TraceOptions {
  std::int64_t period_seconds = 300;
  std::size_t covariates = 5;
  UsageUnit unit = UsageUnit::fraction;
};

/// Reads a `node_id,timestamp,usage` CSV into a panel aligned on the union
/// timestamp grid, nodes sorted lexicographically. Repeated (node, timestamp)
/// rows are summed.
TimeSeriesPanel load_trace(const std::filesystem::path& path, const TraceOptions& options = {});
TimeSeriesPanel parse_trace(std::string_view csv, const TraceOptions& options = {});
void save_trace(const TimeSeriesPanel& panel, const std::filesystem::path& path);

struct SynthConfig {
  std::size_t n_nodes = 40;
  std::size_t n_steps = 300;
  std::size_t n_communities = 2;
  std::size_t factor_period_steps = 24;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;
  std::int64_t period_seconds = 300;
  std::int64_t start_timestamp = 1514764800;  // 2018-01-01T00:00:00Z, a Monday
};

/// Community-structured sinusoidal workloads and their ground-truth graph
/// (unit weight inside communities, nothing across). Node c-th community is
/// the contiguous block [c*N/C, (c+1)*N/C).
std::pair<TimeSeriesPanel, Graph> synth_panel(const SynthConfig& cfg);

nlohmann::json panel_to_json(const TimeSeriesPanel& panel);
TimeSeriesPanel panel_from_json(const nlohmann::json& j);
void save_panel(const TimeSeriesPanel& panel, const std::filesystem::path& path);
TimeSeriesPanel load_panel(const std::filesystem::path& path);

}  // namespace graphdf
