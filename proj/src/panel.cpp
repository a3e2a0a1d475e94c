// SPDX-License-Identifier: Apache-2.0
#include "graphdf/panel.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "graphdf/error.hpp"
#include "graphdf/io.hpp"

namespace graphdf {

namespace {

constexpr int kPanelFormatVersion = 1;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t k = 0; k <= line.size(); ++k) {
    if (k == line.size() || line[k] == sep) {
      out.push_back(trim(line.substr(start, k - start)));
      start = k + 1;
    }
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

int parse_fixed(std::string_view s, std::size_t pos, std::size_t len) {
  int v = 0;
  if (pos + len > s.size() || !parse_number(s.substr(pos, len), v))
    fail(ErrorKind::InvalidValue, fmt::format("malformed timestamp '{}'", s));
  return v;
}

}  // namespace

Eigen::MatrixXd TimeSeriesPanel::covariates_at(std::size_t t) const {
  Eigen::MatrixXd block(targets.rows(), static_cast<Eigen::Index>(covariates.size()));
  for (std::size_t d = 0; d < covariates.size(); ++d)
    block.col(static_cast<Eigen::Index>(d)) = covariates[d].col(static_cast<Eigen::Index>(t));
  return block;
}

TimeSeriesPanel TimeSeriesPanel::slice(std::size_t begin, std::size_t end) const {
  require_shape(begin <= end && end <= num_steps(), "panel slice out of range");
  const auto b = static_cast<Eigen::Index>(begin);
  const auto len = static_cast<Eigen::Index>(end - begin);
  TimeSeriesPanel out;
  out.node_ids = node_ids;
  out.period_seconds = period_seconds;
  out.targets = targets.middleCols(b, len);
  for (const auto& c : covariates) out.covariates.push_back(c.middleCols(b, len));
  out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                        timestamps.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

void TimeSeriesPanel::validate() const {
  const auto n = targets.rows();
  const auto t = targets.cols();
  require_shape(static_cast<std::size_t>(n) == node_ids.size(), "node_ids length differs from target rows");
  require_shape(static_cast<std::size_t>(t) == timestamps.size(), "timestamp count differs from target columns");
  for (const auto& c : covariates)
    require_shape(c.rows() == n && c.cols() == t, "covariate block shape differs from targets");
  if (period_seconds <= 0) fail(ErrorKind::InvalidValue, "period_seconds must be positive");
  if (!targets.allFinite()) fail(ErrorKind::InvalidValue, "targets contain non-finite values");
  if (n > 0 && t > 0 && targets.minCoeff() < 0.0) fail(ErrorKind::InvalidValue, "targets must be >= 0");
  for (const auto& c : covariates)
    if (!c.allFinite()) fail(ErrorKind::InvalidValue, "covariates contain non-finite values");
  for (std::size_t k = 1; k < timestamps.size(); ++k)
    if (timestamps[k] - timestamps[k - 1] != period_seconds)
      fail(ErrorKind::IrregularGrid,
           fmt::format("spacing {} at step {} differs from period {}", timestamps[k] - timestamps[k - 1], k,
                       period_seconds));
}

Eigen::VectorXd time_features(std::int64_t timestamp, double position, std::size_t d) {
  using namespace std::chrono;
  if (d == 0 || d > 5) fail(ErrorKind::InvalidValue, fmt::format("covariate count must be in 1..5, got {}", d));
  const sys_seconds tp{seconds{timestamp}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss hms{tp - day};
  const weekday wd{day};
  Eigen::VectorXd f(5);
  f << static_cast<double>(hms.minutes().count()) / 59.0, static_cast<double>(hms.hours().count()) / 23.0,
      static_cast<double>(wd.iso_encoding() - 1) / 6.0, static_cast<double>(unsigned(ymd.day()) - 1) / 30.0,
      std::clamp(position, 0.0, 1.0);
  return f.head(static_cast<Eigen::Index>(d));
}

Eigen::MatrixXd make_time_covariates(const std::vector<std::int64_t>& timestamps, std::size_t d) {
  if (d == 0 || d > 5) fail(ErrorKind::InvalidValue, fmt::format("covariate count must be in 1..5, got {}", d));
  const auto t = timestamps.size();
  Eigen::MatrixXd block(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(t));
  for (std::size_t k = 0; k < t; ++k) {
    const double pos = t > 1 ? static_cast<double>(k) / static_cast<double>(t - 1) : 0.0;
    block.col(static_cast<Eigen::Index>(k)) = time_features(timestamps[k], pos, d);
  }
  return block;
}

std::vector<Eigen::MatrixXd> replicate_covariates(const Eigen::MatrixXd& block, std::size_t n_nodes) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(block.rows()));
  for (Eigen::Index d = 0; d < block.rows(); ++d)
    out.push_back(block.row(d).replicate(static_cast<Eigen::Index>(n_nodes), 1));
  return out;
}

std::int64_t parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  text = trim(text);
  if (std::int64_t epoch = 0; parse_number(text, epoch)) return epoch;
  // YYYY-MM-DD[T ]HH:MM[:SS][Z|+HH:MM|-HH:MM]
  if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':')
    fail(ErrorKind::InvalidValue, fmt::format("malformed timestamp '{}'", text));
  const int y = parse_fixed(text, 0, 4);
  const int mo = parse_fixed(text, 5, 2);
  const int dd = parse_fixed(text, 8, 2);
  const int hh = parse_fixed(text, 11, 2);
  const int mi = parse_fixed(text, 14, 2);
  int ss = 0;
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    ss = parse_fixed(text, pos + 1, 2);
    pos += 3;
  }
  std::int64_t offset = 0;
  if (pos < text.size()) {
    const char sign = text[pos];
    if (sign == 'Z' && pos + 1 == text.size()) {
      offset = 0;
    } else if ((sign == '+' || sign == '-') && text.size() == pos + 6 && text[pos + 3] == ':') {
      offset = (parse_fixed(text, pos + 1, 2) * 3600 + parse_fixed(text, pos + 4, 2) * 60) * (sign == '+' ? 1 : -1);
    } else {
      fail(ErrorKind::InvalidValue, fmt::format("malformed timestamp '{}'", text));
    }
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(dd)}};
  if (!ymd.ok() || hh > 23 || mi > 59 || ss > 60)
    fail(ErrorKind::InvalidValue, fmt::format("invalid calendar timestamp '{}'", text));
  const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days_since_epoch) * 86400 + hh * 3600 + mi * 60 + ss - offset;
}

std::string format_timestamp(std::int64_t epoch_seconds) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{epoch_seconds}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss hms{tp - day};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", int(ymd.year()), unsigned(ymd.month()),
                     unsigned(ymd.day()), hms.hours().count(), hms.minutes().count(), hms.seconds().count());
}

TimeSeriesPanel parse_trace(std::string_view csv, const TraceOptions& options) {
  if (options.period_seconds <= 0) fail(ErrorKind::InvalidValue, "period_seconds must be positive");
  std::map<std::string, std::map<std::int64_t, double>> cells;
  std::set<std::int64_t> grid;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t start = 0;
  while (start <= csv.size()) {
    auto end = csv.find('\n', start);
    if (end == std::string_view::npos) end = csv.size();
    const auto line = trim(csv.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (!header_seen) {
      if (fields.size() != 3 || fields[0] != "node_id" || fields[1] != "timestamp" || fields[2] != "usage")
        fail(ErrorKind::InvalidValue, "trace header must be 'node_id,timestamp,usage'");
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) fail(ErrorKind::InvalidValue, fmt::format("line {}: expected 3 fields", line_no));
    const std::int64_t ts = parse_timestamp(fields[1]);
    double usage = 0.0;
    if (!parse_number(fields[2], usage) || !std::isfinite(usage))
      fail(ErrorKind::InvalidValue, fmt::format("line {}: bad usage '{}'", line_no, fields[2]));
    if (usage < 0.0) fail(ErrorKind::InvalidValue, fmt::format("line {}: negative usage {}", line_no, usage));
    if (options.unit == UsageUnit::percent) usage /= 100.0;
    cells[std::string(fields[0])][ts] += usage;
    grid.insert(ts);
    if (end == csv.size()) break;
  }
  if (!header_seen) fail(ErrorKind::InvalidValue, "empty trace");

  const std::vector<std::int64_t> stamps(grid.begin(), grid.end());
  for (std::size_t k = 1; k < stamps.size(); ++k)
    if (stamps[k] - stamps[k - 1] != options.period_seconds)
      fail(ErrorKind::IrregularGrid, fmt::format("timestamps {} and {} are not {} s apart", stamps[k - 1], stamps[k],
                                                 options.period_seconds));

  TimeSeriesPanel panel;
  panel.period_seconds = options.period_seconds;
  panel.timestamps = stamps;
  panel.targets.resize(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(stamps.size()));
  Eigen::Index row = 0;
  for (const auto& [node, series] : cells) {
    panel.node_ids.push_back(node);
    for (std::size_t k = 0; k < stamps.size(); ++k) {
      auto it = series.find(stamps[k]);
      if (it == series.end())
        fail(ErrorKind::MissingObservation,
             fmt::format("node '{}' has no observation at {}", node, format_timestamp(stamps[k])));
      panel.targets(row, static_cast<Eigen::Index>(k)) = it->second;
    }
    ++row;
  }
  panel.covariates = replicate_covariates(make_time_covariates(stamps, options.covariates), cells.size());
  return panel;
}

TimeSeriesPanel load_trace(const std::filesystem::path& path, const TraceOptions& options) {
  return parse_trace(io::read_file(path), options);
}

void save_trace(const TimeSeriesPanel& panel, const std::filesystem::path& path) {
  std::string out = "node_id,timestamp,usage\n";
  for (std::size_t i = 0; i < panel.num_nodes(); ++i)
    for (std::size_t t = 0; t < panel.num_steps(); ++t)
      out += fmt::format("{},{},{}\n", panel.node_ids[i], panel.timestamps[t],
                         panel.targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)));
  io::write_atomic(path, out);
}

std::pair<TimeSeriesPanel, Graph> synth_panel(const SynthConfig& cfg) {
  if (cfg.n_nodes == 0 || cfg.n_steps == 0 || cfg.n_communities == 0 || cfg.factor_period_steps == 0)
    fail(ErrorKind::InvalidValue, "synth_panel counts must be positive");
  if (cfg.n_communities > cfg.n_nodes) fail(ErrorKind::InvalidValue, "n_communities must not exceed n_nodes");
  if (!(cfg.noise_sigma >= 0.0 && cfg.noise_sigma < 1.0))
    fail(ErrorKind::InvalidValue, "noise_sigma must lie in [0, 1)");

  const auto n = cfg.n_nodes;
  const auto steps = cfg.n_steps;
  std::vector<std::size_t> community(n);
  for (std::size_t i = 0; i < n; ++i) community[i] = i * cfg.n_communities / n;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  TimeSeriesPanel panel;
  panel.period_seconds = cfg.period_seconds;
  const int width = static_cast<int>(std::to_string(n - 1).size());
  for (std::size_t i = 0; i < n; ++i) panel.node_ids.push_back(fmt::format("node{:0{}d}", i, width));
  for (std::size_t t = 0; t < steps; ++t)
    panel.timestamps.push_back(cfg.start_timestamp + static_cast<std::int64_t>(t) * cfg.period_seconds);
  panel.targets.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(steps));
  const double omega = 2.0 * std::numbers::pi / static_cast<double>(cfg.factor_period_steps);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(community[i]) /
                           static_cast<double>(cfg.n_communities);
      const double base = 0.5 + 0.4 * std::sin(omega * static_cast<double>(t) + phase);
      const double eps = cfg.noise_sigma > 0.0 ? cfg.noise_sigma * noise(rng) : 0.0;
      panel.targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = std::max(0.0, base + eps);
    }
  }
  panel.covariates = replicate_covariates(make_time_covariates(panel.timestamps, 5), n);

  Graph g;
  g.n = n;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (community[i] == community[j]) g.edges.push_back({i, j, 1.0});
  g.provenance.source = "synth";
  g.provenance.seed = cfg.seed;
  g.provenance.keep_rule = "community";
  return {std::move(panel), std::move(g)};
}

nlohmann::json panel_to_json(const TimeSeriesPanel& panel) {
  nlohmann::json cov = nlohmann::json::array();
  for (const auto& c : panel.covariates) cov.push_back(io::matrix_to_json(c));
  return {{"format", "graphdf-panel"},
          {"version", kPanelFormatVersion},
          {"period_seconds", panel.period_seconds},
          {"node_ids", panel.node_ids},
          {"timestamps", panel.timestamps},
          {"targets", io::matrix_to_json(panel.targets)},
          {"covariates", std::move(cov)}};
}

TimeSeriesPanel panel_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "graphdf-panel")
    fail(ErrorKind::InvalidValue, "not a graphdf panel document");
  if (j.at("version").get<int>() != kPanelFormatVersion)
    fail(ErrorKind::InvalidValue, fmt::format("unsupported panel version {}", j.at("version").get<int>()));
  TimeSeriesPanel panel;
  panel.period_seconds = j.at("period_seconds").get<std::int64_t>();
  panel.node_ids = j.at("node_ids").get<std::vector<std::string>>();
  panel.timestamps = j.at("timestamps").get<std::vector<std::int64_t>>();
  panel.targets = io::matrix_from_json(j.at("targets"));
  for (const auto& c : j.at("covariates")) panel.covariates.push_back(io::matrix_from_json(c));
  panel.validate();
  return panel;
}

void save_panel(const TimeSeriesPanel& panel, const std::filesystem::path& path) {
  io::write_atomic(path, panel_to_json(panel).dump());
}

TimeSeriesPanel load_panel(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidValue, fmt::format("{}: {}", path.string(), e.what()));
  }
  return panel_from_json(j);
}

}  // namespace graphdf
