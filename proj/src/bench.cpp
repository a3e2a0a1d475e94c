// SPDX-License-Identifier: Apache-2.0
#include "graphdf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <fmt/format.h>

#include "graphdf/error.hpp"

namespace graphdf {

std::vector<BenchRow> scalability_bench(const VariantConfig& variant, const TimeSeriesPanel& panel, const Graph& graph,
                                        const TrainConfig& base, const BenchConfig& bench) {
  if (bench.sizes.empty() || bench.repeats == 0) fail(ErrorKind::InvalidValue, "bench needs sizes and repeats");
  std::vector<BenchRow> rows;
  for (auto size : bench.sizes) {
    TrainConfig cfg = base;
    cfg.lookback = size;
    cfg.windows = 1;
    cfg.epochs = bench.epochs;
    cfg.early_stop = false;
    cfg.progress = false;
    BenchRow row;
    row.size = size;
    for (std::size_t r = 0; r < bench.repeats; ++r) {
      GraphDFModel model(variant, graph, panel.num_covariates(), NodeScaling::identity(graph.n), cfg.seed);
      const auto t0 = std::chrono::steady_clock::now();
      train(model, panel, cfg);
      row.repeat_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    auto sorted = row.repeat_seconds;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    row.seconds = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string csv = "size,seconds\n";
  for (const auto& r : rows) csv += fmt::format("{},{:.6f}\n", r.size, r.seconds);
  return csv;
}

double log_log_slope(const std::vector<BenchRow>& rows) {
  if (rows.size() < 2) fail(ErrorKind::InvalidValue, "slope needs at least two sizes");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : rows) {
    if (r.size == 0 || !(r.seconds > 0.0)) fail(ErrorKind::InvalidValue, "sizes and times must be positive");
    const double x = std::log(static_cast<double>(r.size)), y = std::log(r.seconds);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double k = static_cast<double>(rows.size());
  const double den = k * sxx - sx * sx;
  if (den == 0.0) fail(ErrorKind::InvalidValue, "slope needs distinct sizes");
  return (k * sxy - sx * sy) / den;
}

}  // namespace graphdf
