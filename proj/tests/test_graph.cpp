// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>
#include <set>

#include "graphdf/error.hpp"
#include "graphdf/graph.hpp"
#include "test_util.hpp"

using namespace graphdf;

namespace {

Graph edge_graph() { return Graph{2, {{0, 1, 1.0}}, {}}; }

Graph triangle() { return Graph{3, {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}}, {}}; }

// Brute-force normalized Laplacian with the identity row for isolated nodes.
Eigen::MatrixXd dense_laplacian(const Graph& g) {
  Eigen::MatrixXd a = g.dense_adjacency();
  Eigen::VectorXd deg = a.rowwise().sum();
  Eigen::MatrixXd l = Eigen::MatrixXd::Identity(g.n, g.n);
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.n; ++j)
      if (deg(i) > 0 && deg(j) > 0) l(i, j) -= a(i, j) / std::sqrt(deg(i) * deg(j));
  return l;
}

}  // namespace

TEST(RbfGraph, IdenticalSeriesGetUnitWeight) {
  Eigen::MatrixXd z(2, 3);
  z << 0.1, 0.5, 0.9, 0.1, 0.5, 0.9;
  Graph g = build_rbf_graph(z, 0.3, KeepRule::top_k(1));
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_DOUBLE_EQ(g.edges[0].weight, 1.0);
}

TEST(RbfGraph, SquaredDistanceOfTwoLengthScalesGivesInverseE) {
  const double ell = 0.7;
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, 2);
  // ||z0 - z1||^2 = 2 ell^2
  z(1, 0) = ell;
  z(1, 1) = ell;
  Graph g = build_rbf_graph(z, ell, KeepRule::top_k(1));
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_NEAR(g.edges[0].weight, 0.367879441171442, 1e-12);
}

TEST(RbfGraph, TopOneConnectsOnlyTheIdenticalPair) {
  Eigen::MatrixXd z(3, 4);
  z << 0.2, 0.4, 0.6, 0.8,  //
      0.2, 0.4, 0.6, 0.8,   //
      50.0, -40.0, 60.0, 70.0;
  Graph g = build_rbf_graph(z, 1.0, KeepRule::top_k(1));
  // The distant node's kernel row underflows to zero, so it keeps no edge.
  Eigen::MatrixXd kernel(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) kernel(i, j) = std::exp(-(z.row(i) - z.row(j)).squaredNorm() / 2.0);
  std::set<std::pair<std::size_t, std::size_t>> expected;
  for (int i = 0; i < 3; ++i) {
    int best = -1;
    for (int j = 0; j < 3; ++j)
      if (j != i && (best < 0 || kernel(i, j) > kernel(i, best))) best = j;
    if (kernel(i, best) > 0) expected.insert({std::min(i, best), std::max(i, best)});
  }
  std::set<std::pair<std::size_t, std::size_t>> got;
  for (const auto& e : g.edges) got.insert({e.i, e.j});
  EXPECT_EQ(got, expected);
  EXPECT_EQ(got, (std::set<std::pair<std::size_t, std::size_t>>{{0, 1}}));
}

TEST(RbfGraph, ThresholdRuleAndEmptyResult) {
  Eigen::MatrixXd z(3, 1);
  z << 0.0, 0.1, 10.0;
  Graph g = build_rbf_graph(z, 1.0, KeepRule::threshold(0.5));
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.edges[0].i, 0u);
  EXPECT_EQ(g.edges[0].j, 1u);

  Graph empty = build_rbf_graph(z, 1e-3, KeepRule::threshold(0.99));
  EXPECT_TRUE(empty.edges.empty());
  EXPECT_EQ(empty.n, 3u);
  auto b = laplacian_bundle(empty);
  EXPECT_EQ(b.degree, Eigen::VectorXd::Zero(3));
}

TEST(RbfGraph, PermutationEquivariant) {
  std::mt19937_64 rng(11);
  const std::size_t n = 9;
  Eigen::MatrixXd z = test::random_matrix(n, 6, rng);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd zp(n, 6);
  for (std::size_t i = 0; i < n; ++i) zp.row(i) = z.row(perm[i]);  // new node i is old perm[i]

  for (const KeepRule rule : {KeepRule::top_k(2), KeepRule::threshold(0.3)}) {
    Graph g = build_rbf_graph(z, 1.0, rule);
    Graph gp = build_rbf_graph(zp, 1.0, rule);
    Eigen::MatrixXd a = g.dense_adjacency(), ap = gp.dense_adjacency();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(ap(i, j), a(perm[i], perm[j]));
  }
}

TEST(RbfGraph, MedianLengthScale) {
  Eigen::MatrixXd z(3, 1);
  z << 0.0, 1.0, 3.0;  // distances 1, 3, 2
  EXPECT_DOUBLE_EQ(median_length_scale(z), 2.0);
  EXPECT_DOUBLE_EQ(median_length_scale(Eigen::MatrixXd::Ones(4, 3)), 1.0);
}

TEST(KeepRule, ParsesAndPrints) {
  auto k = KeepRule::parse("topk:5");
  EXPECT_EQ(k.kind, KeepRule::Kind::top_k);
  EXPECT_EQ(k.k, 5u);
  auto t = KeepRule::parse("threshold:0.25");
  EXPECT_EQ(t.kind, KeepRule::Kind::threshold);
  EXPECT_DOUBLE_EQ(t.theta, 0.25);
  EXPECT_EQ(KeepRule::parse(k.to_string()).k, 5u);
  EXPECT_THROW(KeepRule::parse("topk:0"), Error);
  EXPECT_THROW(KeepRule::parse("threshold:1.5"), Error);
  EXPECT_THROW(KeepRule::parse("nearest"), Error);
}

TEST(GraphValidate, RejectsMalformedEdges) {
  EXPECT_THROW((Graph{3, {{1, 1, 1.0}}, {}}.validate()), Error);
  EXPECT_THROW((Graph{3, {{2, 1, 1.0}}, {}}.validate()), Error);
  EXPECT_THROW((Graph{3, {{0, 1, 1.0}, {0, 1, 0.5}}, {}}.validate()), Error);
  EXPECT_THROW((Graph{3, {{0, 1, 0.0}}, {}}.validate()), Error);
  EXPECT_THROW((Graph{3, {{0, 1, 1.5}}, {}}.validate()), Error);
  EXPECT_THROW((Graph{3, {{0, 3, 1.0}}, {}}.validate()), Error);
  EXPECT_NO_THROW(triangle().validate());
}

TEST(LaplacianBundle, SingleEdge) {
  auto b = laplacian_bundle(edge_graph());
  Eigen::Matrix2d l;
  l << 1, -1, -1, 1;
  EXPECT_LT((b.laplacian.to_dense() - l).norm(), 1e-15);
  EXPECT_NEAR(b.lambda_max, 2.0, 1e-9);
  Eigen::Matrix2d scaled;
  scaled << 0, -1, -1, 0;
  EXPECT_LT((b.scaled_laplacian.to_dense() - scaled).norm(), 1e-8);
}

TEST(LaplacianBundle, EmptyGraphIsIdentity) {
  auto b = laplacian_bundle(Graph{3, {}, {}});
  EXPECT_EQ(b.laplacian.to_dense(), Eigen::MatrixXd::Identity(3, 3));
  EXPECT_EQ(b.normalized_adjacency.to_dense(), Eigen::MatrixXd::Zero(3, 3));
}

TEST(LaplacianBundle, AssumeTwoMode) {
  auto b = laplacian_bundle(triangle(), LambdaMode::assume_two);
  EXPECT_EQ(b.lambda_max, 2.0);
  Eigen::MatrixXd expected = b.laplacian.to_dense() - Eigen::MatrixXd::Identity(3, 3);
  EXPECT_LT((b.scaled_laplacian.to_dense() - expected).norm(), 1e-15);
}

TEST(LaplacianBundle, PropertiesOnRandomGraphs) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t n = 2 + seed % 19;
    Graph g = random_graph(n, 0.3, seed);
    auto b = laplacian_bundle(g);
    Eigen::MatrixXd l = b.laplacian.to_dense();
    EXPECT_EQ((l - l.transpose()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LT((l - dense_laplacian(g)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE(b.lambda_max, 2.0 + 1e-9);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(l);
    EXPECT_NEAR(b.lambda_max, eig.eigenvalues().maxCoeff(), 1e-6);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> seig(b.scaled_laplacian.to_dense());
    EXPECT_GE(seig.eigenvalues().minCoeff(), -1.0 - 1e-6);
    EXPECT_LE(seig.eigenvalues().maxCoeff(), 1.0 + 1e-6);
    Eigen::VectorXd rows = b.normalized_adjacency.to_dense().rowwise().sum();
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(rows(i), b.degree(i) > 0 ? 1.0 : 0.0, 1e-14);
  }
}

TEST(Neighborhood, IsolatedNode) {
  Graph g{3, {{0, 1, 1.0}}, {}};
  auto b = laplacian_bundle(g);
  auto nb = node_neighborhood(b, g, 2);
  EXPECT_EQ(nb.indices, std::vector<std::size_t>{2});
  ASSERT_EQ(nb.laplacian.rows(), 1);
  EXPECT_EQ(nb.laplacian(0, 0), 1.0);
}

TEST(Neighborhood, TriangleIsComplete) {
  Graph g = triangle();
  auto b = laplacian_bundle(g);
  auto nb = node_neighborhood(b, g, 0);
  EXPECT_EQ(nb.indices, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(nb.laplacian, b.laplacian.to_dense());
  EXPECT_EQ(node_neighborhood(b, g, 2).indices, (std::vector<std::size_t>{2, 0, 1}));
}

TEST(Neighborhood, PathWithTwoHops) {
  Graph g{3, {{0, 1, 1.0}, {1, 2, 1.0}}, {}};
  auto b = laplacian_bundle(g);
  EXPECT_EQ(node_neighborhood(b, g, 0, 2).indices, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(node_neighborhood(b, g, 0, 1).indices, (std::vector<std::size_t>{0, 1}));
}

TEST(Neighborhood, MatchesBruteForceExtraction) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 5 + seed;
    Graph g = random_graph(n, 0.25, seed + 100);
    auto b = laplacian_bundle(g);
    Eigen::MatrixXd a = g.dense_adjacency();
    Eigen::MatrixXd l = b.laplacian.to_dense();
    for (std::size_t hops = 1; hops <= 2; ++hops)
      for (std::size_t i = 0; i < n; ++i) {
        // breadth-first search to depth `hops`
        std::vector<int> depth(n, -1);
        depth[i] = 0;
        std::deque<std::size_t> queue{i};
        while (!queue.empty()) {
          auto u = queue.front();
          queue.pop_front();
          if (depth[u] == static_cast<int>(hops)) continue;
          for (std::size_t v = 0; v < n; ++v)
            if (a(u, v) > 0 && depth[v] < 0) {
              depth[v] = depth[u] + 1;
              queue.push_back(v);
            }
        }
        std::vector<std::size_t> expected{i};
        for (std::size_t v = 0; v < n; ++v)
          if (v != i && depth[v] > 0) expected.push_back(v);
        auto nb = node_neighborhood(b, g, i, hops);
        ASSERT_EQ(nb.indices, expected);
        for (std::size_t r = 0; r < expected.size(); ++r)
          for (std::size_t c = 0; c < expected.size(); ++c)
            EXPECT_EQ(nb.laplacian(r, c), l(expected[r], expected[c]));
      }
  }
}

TEST(GraphIo, SaveLoadRoundTrip) {
  auto dir = test::scratch_dir("graph_io");
  Graph g = random_graph(12, 0.3, 4);
  g.provenance.length_scale = 0.5;
  g.provenance.keep_rule = "topk:3";
  g.provenance.seed = 4;
  save_graph(g, dir / "g.csv");
  EXPECT_TRUE(std::filesystem::exists(dir / "g.csv.json"));
  Graph back = load_graph(dir / "g.csv");
  EXPECT_EQ(back.n, g.n);
  EXPECT_EQ(back.edges, g.edges);
  EXPECT_EQ(back.provenance.keep_rule, "topk:3");
  EXPECT_EQ(back.provenance.length_scale, 0.5);
}

TEST(RandomGraph, DeterministicAndValid) {
  Graph a = random_graph(20, 0.2, 9), b = random_graph(20, 0.2, 9);
  EXPECT_EQ(a.edges, b.edges);
  EXPECT_NO_THROW(a.validate());
  for (const auto& e : a.edges) EXPECT_GT(e.weight, 0.1 - 1e-12);
}
