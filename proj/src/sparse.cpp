// SPDX-License-Identifier: Apache-2.0
#include "graphdf/sparse.hpp"

#include <algorithm>
#include <unordered_map>

#include "graphdf/error.hpp"

namespace graphdf {

namespace {
thread_local std::uint64_t tl_matvecs = 0;
}

std::uint64_t matvec_count() { return tl_matvecs; }
void reset_matvec_count() { tl_matvecs = 0; }

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries) {
  for (const auto& e : entries)
    require_shape(e.row < rows && e.col < cols, "triplet index out of range");
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.row_ptr_.assign(rows + 1, 0);
  for (std::size_t k = 0; k < entries.size();) {
    const auto& e = entries[k];
    double sum = 0.0;
    std::size_t j = k;
    for (; j < entries.size() && entries[j].row == e.row && entries[j].col == e.col; ++j)
      sum += entries[j].value;
    m.col_idx_.push_back(e.col);
    m.values_.push_back(sum);
    ++m.row_ptr_[e.row + 1];
    k = j;
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

CsrMatrix CsrMatrix::from_dense(const Eigen::MatrixXd& dense) {
  std::vector<Triplet> t;
  for (Eigen::Index r = 0; r < dense.rows(); ++r)
    for (Eigen::Index c = 0; c < dense.cols(); ++c)
      if (dense(r, c) != 0.0)
        t.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c), dense(r, c)});
  return from_triplets(static_cast<std::size_t>(dense.rows()), static_cast<std::size_t>(dense.cols()),
                       std::move(t));
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(t));
}

double CsrMatrix::coeff(std::size_t row, std::size_t col) const {
  const auto cols = row_cols(row);
  const auto it = std::lower_bound(cols.begin(), cols.end(), col);
  if (it == cols.end() || *it != col) return 0.0;
  return values_[row_ptr_[row] + static_cast<std::size_t>(it - cols.begin())];
}

std::span<const std::size_t> CsrMatrix::row_cols(std::size_t row) const {
  return {col_idx_.data() + row_ptr_[row], row_ptr_[row + 1] - row_ptr_[row]};
}

std::span<const double> CsrMatrix::row_values(std::size_t row) const {
  return {values_.data() + row_ptr_[row], row_ptr_[row + 1] - row_ptr_[row]};
}

Eigen::MatrixXd CsrMatrix::multiply(const Eigen::MatrixXd& x) const {
  require_shape(static_cast<std::size_t>(x.rows()) == cols_, "sparse multiply: dimension mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (std::size_t r = 0; r < rows_; ++r) {
      double acc = 0.0;
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        acc += values_[k] * x(static_cast<Eigen::Index>(col_idx_[k]), c);
      out(static_cast<Eigen::Index>(r), c) = acc;
    }
  }
  tl_matvecs += static_cast<std::uint64_t>(x.cols());
  return out;
}

Eigen::MatrixXd CsrMatrix::multiply_transpose(const Eigen::MatrixXd& x) const {
  require_shape(static_cast<std::size_t>(x.rows()) == rows_,
                "sparse transpose multiply: dimension mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cols_), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (std::size_t r = 0; r < rows_; ++r) {
      const double xr = x(static_cast<Eigen::Index>(r), c);
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        out(static_cast<Eigen::Index>(col_idx_[k]), c) += values_[k] * xr;
    }
  }
  tl_matvecs += static_cast<std::uint64_t>(x.cols());
  return out;
}

Eigen::MatrixXd CsrMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_),
                                            static_cast<Eigen::Index>(cols_));
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      d(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col_idx_[k])) = values_[k];
  return d;
}

CsrMatrix CsrMatrix::principal_submatrix(std::span<const std::size_t> indices) const {
  std::unordered_map<std::size_t, std::size_t> local;
  local.reserve(indices.size());
  for (std::size_t a = 0; a < indices.size(); ++a) {
    require_shape(indices[a] < rows_ && indices[a] < cols_, "submatrix index out of range");
    local.emplace(indices[a], a);
  }
  std::vector<Triplet> t;
  for (std::size_t a = 0; a < indices.size(); ++a) {
    const std::size_t r = indices[a];
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      if (auto it = local.find(col_idx_[k]); it != local.end()) t.push_back({a, it->second, values_[k]});
    }
  }
  return from_triplets(indices.size(), indices.size(), std::move(t));
}

}  // namespace graphdf
