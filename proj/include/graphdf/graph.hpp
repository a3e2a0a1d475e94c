// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "graphdf/sparse.hpp"

namespace graphdf {

struct TimeSeriesPanel;

struct Edge {
  std::size_t i = 0;  // i < j
  std::size_t j = 0;
  double weight = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Sparsification applied to the dense RBF kernel matrix.
struct KeepRule {
  enum class Kind { top_k, threshold };
  Kind kind = Kind::top_k;
  std::size_t k = 1;
  double theta = 0.5;

  static KeepRule top_k(std::size_t k);
  static KeepRule threshold(double theta);
  /// "topk:<k>" or "threshold:<theta>".
  static KeepRule parse(const std::string& text);
  std::string to_string() const;
};

/// Construction metadata carried alongside the edge list.
struct GraphProvenance {
  std::optional<double> length_scale;
  std::string keep_rule;
  std::optional<std::uint64_t> seed;
  std::string source;
};

/// Undirected weighted graph as an upper-triangular edge list.
struct Graph {
  std::size_t n = 0;
  std::vector<Edge> edges;
  GraphProvenance provenance;

  /// Throws InvalidValue on self-loops, duplicate pairs, i >= j or weights
  /// outside (0, 1].
  void validate() const;
  Eigen::MatrixXd dense_adjacency() const;
  /// Fraction of possible undirected pairs present.
  double density() const;
  /// Sorted neighbor lists.
  std::vector<std::vector<std::size_t>> adjacency_lists() const;
};

/// Operators derived from one graph. Isolated nodes get an identity row in
/// the Laplacian and a zero row in the normalized adjacency.
struct LaplacianBundle {
  CsrMatrix laplacian;             // I - D^-1/2 A D^-1/2
  CsrMatrix scaled_laplacian;      // 2 L / lambda_max - I
  CsrMatrix normalized_adjacency;  // D^-1 A
  Eigen::VectorXd degree;
  double lambda_max = 2.0;
  bool lambda_converged = true;
  std::size_t lambda_iterations = 0;

  std::size_t size() const { return static_cast<std::size_t>(degree.size()); }
};

enum class LambdaMode { exact, assume_two };

/// Median of ||z_i - z_j|| over node pairs (all pairs when n <= 2000,
/// otherwise a seeded sample). Falls back to 1.0 if every series is equal.
double median_length_scale(const Eigen::MatrixXd& series, std::uint64_t seed = 0);

/// RBF kernel exp(-||z_i - z_j||^2 / (2 l^2)) over the rows of `series`,
/// sparsified by `rule` and symmetrized by union. An empty result is logged
/// as a DegenerateGraph warning, not thrown.
Graph build_rbf_graph(const Eigen::MatrixXd& series, double length_scale, const KeepRule& rule);
Graph build_rbf_graph(const TimeSeriesPanel& panel, double length_scale, const KeepRule& rule);

/// Smallest k whose top-k union graph is expected to reach `density`.
std::size_t top_k_for_density(std::size_t n, double density);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
struct PowerIterationResult {
  double value = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};
PowerIterationResult power_iteration(const CsrMatrix& m, double tolerance = 1e-9,
                                     std::size_t max_iterations = 1000);

LaplacianBundle laplacian_bundle(const Graph& g, LambdaMode mode = LambdaMode::exact);

struct Neighborhood {
  std::vector<std::size_t> indices;  // node itself first, then ascending neighbors
  Eigen::MatrixXd laplacian;         // principal submatrix of L on `indices`
};

Neighborhood node_neighborhood(const LaplacianBundle& bundle, const Graph& g, std::size_t node,
                               std::size_t hops = 1);
/// Same, reusing precomputed adjacency lists.
Neighborhood node_neighborhood(const LaplacianBundle& bundle,
                               const std::vector<std::vector<std::size_t>>& adjacency,
                               std::size_t node, std::size_t hops = 1);

/// Erdos-Renyi graph: each pair joined with probability `p`, weights drawn
/// uniformly from (0.1, 1].
Graph random_graph(std::size_t n, double p, std::uint64_t seed);

/// Edge list CSV `src,dst,weight` plus `<path>.json` sidecar holding n and provenance.
void save_graph(const Graph& g, const std::filesystem::path& csv_path);
Graph load_graph(const std::filesystem::path& csv_path);

}  // namespace graphdf
