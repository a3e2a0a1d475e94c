// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "graphdf/graph.hpp"
#include "graphdf/model.hpp"
#include "graphdf/panel.hpp"
#include "graphdf/training.hpp"

namespace graphdf {

struct BenchRow {
  std::size_t size = 0;
  double seconds = 0.0;              // median over repeats
  std::vector<double> repeat_seconds;
};

struct BenchConfig {
  std::vector<std::size_t> sizes{2, 4, 8, 16, 32};
  std::size_t repeats = 3;
  std::size_t epochs = 5;
};

/// Trains `variant` once per window size (training on the most recent
/// window of that length, early stopping off) and records the wall-clock.
std::vector<BenchRow> scalability_bench(const VariantConfig& variant, const TimeSeriesPanel& panel, const Graph& graph,
                                        const TrainConfig& base, const BenchConfig& bench);

/// `size,seconds` rows.
std::string bench_csv(const std::vector<BenchRow>& rows);

/// Least-squares slope of log(seconds) against log(size).
double log_log_slope(const std::vector<BenchRow>& rows);

}  // namespace graphdf
