// SPDX-License-Identifier: Apache-2.0
#include "graphdf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>
#include <json.hpp>

#include "graphdf/error.hpp"
#include "graphdf/io.hpp"
#include "graphdf/log.hpp"
#include "graphdf/panel.hpp"

namespace graphdf {

KeepRule KeepRule::top_k(std::size_t k) {
  if (k == 0) fail(ErrorKind::InvalidValue, "top-k rule needs k >= 1");
  KeepRule r;
  r.kind = Kind::top_k;
  r.k = k;
  return r;
}

KeepRule KeepRule::threshold(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) fail(ErrorKind::InvalidValue, "threshold must lie in (0, 1)");
  KeepRule r;
  r.kind = Kind::threshold;
  r.theta = theta;
  return r;
}

KeepRule KeepRule::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) fail(ErrorKind::InvalidValue, "keep rule must be 'topk:<k>' or 'threshold:<t>'");
  const auto kind = text.substr(0, colon);
  const auto value = text.substr(colon + 1);
  try {
    if (kind == "topk") return top_k(static_cast<std::size_t>(std::stoull(value)));
    if (kind == "threshold") return threshold(std::stod(value));
  } catch (const std::logic_error&) {
    fail(ErrorKind::InvalidValue, "bad keep rule value '" + value + "'");
  }
  fail(ErrorKind::InvalidValue, "unknown keep rule '" + kind + "'");
}

std::string KeepRule::to_string() const {
  return kind == Kind::top_k ? fmt::format("topk:{}", k) : fmt::format("threshold:{}", theta);
}

void Graph::validate() const {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& e : edges) {
    if (e.i >= e.j) fail(ErrorKind::InvalidValue, fmt::format("edge ({}, {}) must satisfy i < j", e.i, e.j));
    if (e.j >= n) fail(ErrorKind::InvalidValue, fmt::format("edge ({}, {}) outside {} nodes", e.i, e.j, n));
    if (!(e.weight > 0.0 && e.weight <= 1.0))
      fail(ErrorKind::InvalidValue, fmt::format("edge ({}, {}) weight {} outside (0, 1]", e.i, e.j, e.weight));
    if (!seen.emplace(e.i, e.j).second)
      fail(ErrorKind::InvalidValue, fmt::format("duplicate edge ({}, {})", e.i, e.j));
  }
}

Eigen::MatrixXd Graph::dense_adjacency() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& e : edges) {
    a(static_cast<Eigen::Index>(e.i), static_cast<Eigen::Index>(e.j)) = e.weight;
    a(static_cast<Eigen::Index>(e.j), static_cast<Eigen::Index>(e.i)) = e.weight;
  }
  return a;
}

double Graph::density() const {
  if (n < 2) return 0.0;
  return 2.0 * static_cast<double>(edges.size()) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

std::vector<std::vector<std::size_t>> Graph::adjacency_lists() const {
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : edges) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

double median_length_scale(const Eigen::MatrixXd& series, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(series.rows());
  std::vector<double> d;
  auto dist = [&](std::size_t i, std::size_t j) {
    return (series.row(static_cast<Eigen::Index>(i)) - series.row(static_cast<Eigen::Index>(j))).norm();
  };
  if (n <= 2000) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) d.push_back(dist(i, j));
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    while (d.size() < 100000) {
      const auto i = pick(rng);
      const auto j = pick(rng);
      if (i != j) d.push_back(dist(i, j));
    }
  }
  if (d.empty()) return 1.0;
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double med = *mid;
  if (d.size() % 2 == 0) med = 0.5 * (med + *std::max_element(d.begin(), mid));
  return med > 0.0 ? med : 1.0;
}

Graph build_rbf_graph(const Eigen::MatrixXd& series, double length_scale, const KeepRule& rule) {
  if (!(length_scale > 0.0)) fail(ErrorKind::InvalidValue, "length_scale must be positive");
  if (series.cols() < 1) fail(ErrorKind::InvalidValue, "RBF graph needs at least one observation per node");
  const auto n = static_cast<std::size_t>(series.rows());
  const double denom = 2.0 * length_scale * length_scale;

  // Each entry depends only on its own pair.
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sq =
          (series.row(static_cast<Eigen::Index>(i)) - series.row(static_cast<Eigen::Index>(j))).squaredNorm();
      const double w = std::exp(-sq / denom);
      kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w;
      kernel(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = w;
    }
  }

  std::set<std::pair<std::size_t, std::size_t>> keep;
  if (rule.kind == KeepRule::Kind::threshold) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) >= rule.theta) keep.emplace(i, j);
  } else {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i) {
      order.clear();
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) order.push_back(j);
      const auto k = std::min(rule.k, order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](std::size_t a, std::size_t b) {
                          const double wa = kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
                          const double wb = kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b));
                          return wa != wb ? wa > wb : a < b;
                        });
      for (std::size_t r = 0; r < k; ++r) keep.emplace(std::min(i, order[r]), std::max(i, order[r]));
    }
  }

  Graph g;
  g.n = n;
  for (const auto& [i, j] : keep) {
    const double w = kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    if (w > 0.0) g.edges.push_back({i, j, std::min(w, 1.0)});
  }
  g.provenance.length_scale = length_scale;
  g.provenance.keep_rule = rule.to_string();
  g.provenance.source = "rbf";
  if (g.edges.empty() && n > 1)
    logger().warn("DegenerateGraph: every RBF weight was pruned; all {} nodes are isolated", n);
  return g;
}

Graph build_rbf_graph(const TimeSeriesPanel& panel, double length_scale, const KeepRule& rule) {
  return build_rbf_graph(panel.targets, length_scale, rule);
}

std::size_t top_k_for_density(std::size_t n, double density) {
  if (n < 2) return 1;
  const double k = std::ceil(std::clamp(density, 0.0, 1.0) * static_cast<double>(n - 1));
  return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

PowerIterationResult power_iteration(const CsrMatrix& m, double tolerance, std::size_t max_iterations) {
  PowerIterationResult res;
  const auto n = static_cast<Eigen::Index>(m.rows());
  if (n == 0) return res;
  // Fixed pseudo-random start so that no eigenvector is orthogonal to it by construction.
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  Eigen::MatrixXd x(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = (i % 2 == 0 ? 1.0 : -1.0) * u(rng);
  x /= x.norm();
  double prev = 0.0;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    Eigen::MatrixXd y = m.multiply(x);
    const double rayleigh = x.col(0).dot(y.col(0));
    const double norm = y.norm();
    res.iterations = it;
    res.value = rayleigh;
    if (norm == 0.0) {
      res.converged = true;
      return res;
    }
    if (it > 1 && std::abs(rayleigh - prev) <= tolerance * std::max(1.0, std::abs(rayleigh))) {
      res.converged = true;
      return res;
    }
    prev = rayleigh;
    x = y / norm;
  }
  return res;
}

namespace {
constexpr std::size_t kDenseLambdaLimit = 1024;
}  // namespace

LaplacianBundle laplacian_bundle(const Graph& g, LambdaMode mode) {
  g.validate();
  const auto n = g.n;
  LaplacianBundle b;
  b.degree = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (const auto& e : g.edges) {
    b.degree(static_cast<Eigen::Index>(e.i)) += e.weight;
    b.degree(static_cast<Eigen::Index>(e.j)) += e.weight;
  }
  std::vector<Triplet> lap;
  std::vector<Triplet> adj;
  for (std::size_t i = 0; i < n; ++i) lap.push_back({i, i, 1.0});
  for (const auto& e : g.edges) {
    const double di = b.degree(static_cast<Eigen::Index>(e.i));
    const double dj = b.degree(static_cast<Eigen::Index>(e.j));
    const double off = -e.weight / std::sqrt(di * dj);
    lap.push_back({e.i, e.j, off});
    lap.push_back({e.j, e.i, off});
    adj.push_back({e.i, e.j, e.weight / di});
    adj.push_back({e.j, e.i, e.weight / dj});
  }
  b.laplacian = CsrMatrix::from_triplets(n, n, lap);
  b.normalized_adjacency = CsrMatrix::from_triplets(n, n, std::move(adj));

  if (mode == LambdaMode::assume_two) {
    b.lambda_max = 2.0;
  } else {
    const auto pi = power_iteration(b.laplacian);
    b.lambda_iterations = pi.iterations;
    b.lambda_converged = pi.converged && pi.value > 0.0;
    if (b.lambda_converged) {
      b.lambda_max = pi.value;
    } else if (n <= kDenseLambdaLimit) {
      // Nearly degenerate top eigenvalues stall power iteration; small graphs
      // are cheap to solve densely instead.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b.laplacian.to_dense(), Eigen::EigenvaluesOnly);
      b.lambda_max = solver.eigenvalues().maxCoeff();
      b.lambda_converged = true;
      logger().debug("power iteration stalled after {} iterations; dense lambda_max = {}", pi.iterations,
                     b.lambda_max);
    } else {
      logger().warn("power iteration did not converge after {} iterations; using lambda_max = 2", pi.iterations);
      b.lambda_max = 2.0;
    }
  }
  // L~ = 2 L / lambda_max - I, same sparsity as L.
  std::vector<Triplet> scaled;
  for (const auto& t : lap) scaled.push_back({t.row, t.col, 2.0 * t.value / b.lambda_max});
  for (std::size_t i = 0; i < n; ++i) scaled.push_back({i, i, -1.0});
  b.scaled_laplacian = CsrMatrix::from_triplets(n, n, std::move(scaled));
  return b;
}

Neighborhood node_neighborhood(const LaplacianBundle& bundle,
                               const std::vector<std::vector<std::size_t>>& adjacency, std::size_t node,
                               std::size_t hops) {
  require_shape(node < adjacency.size(), "node index out of range");
  if (hops == 0) fail(ErrorKind::InvalidValue, "hops must be >= 1");
  std::vector<std::size_t> frontier{node};
  std::set<std::size_t> seen{node};
  for (std::size_t h = 0; h < hops && !frontier.empty(); ++h) {
    std::vector<std::size_t> next;
    for (auto u : frontier)
      for (auto v : adjacency[u])
        if (seen.insert(v).second) next.push_back(v);
    frontier = std::move(next);
  }
  Neighborhood nb;
  nb.indices.push_back(node);
  for (auto v : seen)
    if (v != node) nb.indices.push_back(v);
  nb.laplacian = bundle.laplacian.principal_submatrix(nb.indices).to_dense();
  return nb;
}

Neighborhood node_neighborhood(const LaplacianBundle& bundle, const Graph& g, std::size_t node, std::size_t hops) {
  return node_neighborhood(bundle, g.adjacency_lists(), node, hops);
}

void save_graph(const Graph& g, const std::filesystem::path& csv_path) {
  std::string csv = "src,dst,weight\n";
  for (const auto& e : g.edges) csv += fmt::format("{},{},{}\n", e.i, e.j, e.weight);
  io::write_atomic(csv_path, csv);
  nlohmann::json side{{"n", g.n}, {"num_edges", g.edges.size()}, {"keep_rule", g.provenance.keep_rule},
                      {"source", g.provenance.source}};
  side["length_scale"] = g.provenance.length_scale ? nlohmann::json(*g.provenance.length_scale) : nlohmann::json();
  side["seed"] = g.provenance.seed ? nlohmann::json(*g.provenance.seed) : nlohmann::json();
  auto side_path = csv_path;
  side_path += ".json";
  io::write_atomic(side_path, side.dump(2));
}

Graph load_graph(const std::filesystem::path& csv_path) {
  auto side_path = csv_path;
  side_path += ".json";
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(io::read_file(side_path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidValue, fmt::format("{}: {}", side_path.string(), e.what()));
  }
  Graph g;
  g.n = side.at("n").get<std::size_t>();
  g.provenance.keep_rule = side.value("keep_rule", std::string{});
  g.provenance.source = side.value("source", std::string{});
  if (side.contains("length_scale") && !side["length_scale"].is_null())
    g.provenance.length_scale = side["length_scale"].get<double>();
  if (side.contains("seed") && !side["seed"].is_null()) g.provenance.seed = side["seed"].get<std::uint64_t>();

  const auto csv = io::read_file(csv_path);
  std::size_t start = 0;
  bool header = true;
  while (start < csv.size()) {
    auto end = csv.find('\n', start);
    if (end == std::string::npos) end = csv.size();
    const auto line = csv.substr(start, end - start);
    start = end + 1;
    if (line.empty() || line == "\r") continue;
    if (header) {
      header = false;
      if (line.rfind("src,dst,weight", 0) != 0) fail(ErrorKind::InvalidValue, "graph header must be 'src,dst,weight'");
      continue;
    }
    std::size_t a = 0, b = 0;
    double w = 0.0;
    if (std::sscanf(line.c_str(), "%zu,%zu,%lf", &a, &b, &w) != 3)
      fail(ErrorKind::InvalidValue, "malformed edge line '" + line + "'");
    if (a > b) std::swap(a, b);
    g.edges.push_back({a, b, w});
  }
  std::sort(g.edges.begin(), g.edges.end(),
            [](const Edge& x, const Edge& y) { return x.i != y.i ? x.i < y.i : x.j < y.j; });
  g.validate();
  return g;
}

Graph random_graph(std::size_t n, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::InvalidValue, "edge probability must lie in [0, 1]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Graph g;
  g.n = n;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (u(rng) < p) g.edges.push_back({i, j, 1.0 - 0.9 * u(rng)});
  g.provenance.source = "random";
  g.provenance.seed = seed;
  g.provenance.keep_rule = fmt::format("bernoulli:{}", p);
  return g;
}

}  // namespace graphdf
