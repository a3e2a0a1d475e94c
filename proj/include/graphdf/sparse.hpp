// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace graphdf {

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

/// Compressed row storage. Column indices within a row are sorted and unique.
class CsrMatrix {
 public:
  CsrMatrix() = default;

  /// Duplicate (row, col) entries are summed.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);
  /// Exact zeros are dropped.
  static CsrMatrix from_dense(const Eigen::MatrixXd& dense);
  static CsrMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  double coeff(std::size_t row, std::size_t col) const;

  /// A * X. Every column of X counts as one sparse mat-vec product.
  Eigen::MatrixXd multiply(const Eigen::MatrixXd& x) const;
  /// A^T * X, without forming the transpose.
  Eigen::MatrixXd multiply_transpose(const Eigen::MatrixXd& x) const;

  Eigen::MatrixXd to_dense() const;
  CsrMatrix principal_submatrix(std::span<const std::size_t> indices) const;

  std::span<const std::size_t> row_cols(std::size_t row) const;
  std::span<const double> row_values(std::size_t row) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

/// Per-thread count of sparse mat-vec products since the last reset.
std::uint64_t matvec_count();
void reset_matvec_count();

}  // namespace graphdf
