// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "graphdf/sparse.hpp"
#include "test_util.hpp"

using namespace graphdf;

TEST(CsrMatrix, DuplicateTripletsAreSummed) {
  auto m = CsrMatrix::from_triplets(2, 3, {{0, 1, 1.5}, {1, 2, -1.0}, {0, 1, 0.5}, {1, 0, 4.0}});
  EXPECT_EQ(m.nnz(), 3u);
  EXPECT_DOUBLE_EQ(m.coeff(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(m.coeff(1, 0), 4.0);
  EXPECT_DOUBLE_EQ(m.coeff(0, 0), 0.0);
  auto cols = m.row_cols(1);
  ASSERT_EQ(cols.size(), 2u);
  EXPECT_LT(cols[0], cols[1]);
}

TEST(CsrMatrix, FromDenseDropsZerosAndRoundTrips) {
  Eigen::MatrixXd d(3, 3);
  d << 1, 0, 2, 0, 0, 0, -3, 0, 4;
  auto m = CsrMatrix::from_dense(d);
  EXPECT_EQ(m.nnz(), 4u);
  EXPECT_EQ(m.to_dense(), d);
}

TEST(CsrMatrix, ProductsMatchDense) {
  std::mt19937_64 rng(3);
  Eigen::MatrixXd d = test::random_matrix(7, 5, rng);
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      if ((i + 2 * j) % 3 == 0) d(i, j) = 0.0;
  auto m = CsrMatrix::from_dense(d);
  Eigen::MatrixXd x = test::random_matrix(5, 4, rng);
  Eigen::MatrixXd y = test::random_matrix(7, 4, rng);
  EXPECT_LT(test::relative_error(m.multiply(x), d * x), 1e-14);
  EXPECT_LT(test::relative_error(m.multiply_transpose(y), d.transpose() * y), 1e-14);
}

TEST(CsrMatrix, PrincipalSubmatrixFollowsIndexOrder) {
  std::mt19937_64 rng(5);
  Eigen::MatrixXd d = test::random_matrix(6, 6, rng);
  auto m = CsrMatrix::from_dense(d);
  std::vector<std::size_t> idx{4, 0, 2};
  Eigen::MatrixXd sub = m.principal_submatrix(idx).to_dense();
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b)
      EXPECT_DOUBLE_EQ(sub(a, b), d(idx[a], idx[b]));
}

TEST(CsrMatrix, MatvecCounterCountsColumns) {
  auto m = CsrMatrix::identity(4);
  reset_matvec_count();
  m.multiply(Eigen::MatrixXd::Ones(4, 3));
  m.multiply_transpose(Eigen::MatrixXd::Ones(4, 2));
  EXPECT_EQ(matvec_count(), 5u);
}
