// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "graphdf/graph.hpp"
#include "graphdf/sparse.hpp"

namespace graphdf {

enum class FilterFamily {
  chebyshev,  // T_l(L~), three-term recursion on the scaled Laplacian
  diffusion,  // A~^l, powers of the row-normalized adjacency
};

/// One filter tensor: `order` slices, each (input channels) x (output channels).
using FilterTensor = std::vector<Eigen::MatrixXd>;

/// Polynomial filter basis over one fixed sparse operator. For an input X the
/// basis is Z_l = p_l(S) X, l = 0..order-1; any filter sum_l theta_l p_l(S) is
/// then a linear combination of the Z_l.
class GraphFilter {
 public:
  GraphFilter() = default;
  GraphFilter(FilterFamily family, CsrMatrix op);

  static GraphFilter chebyshev(const LaplacianBundle& bundle);
  static GraphFilter diffusion(const LaplacianBundle& bundle);
  static GraphFilter from_bundle(FilterFamily family, const LaplacianBundle& bundle);

  /// Filter on the principal submatrix of the operator over `indices`.
  GraphFilter restrict_to(std::span<const std::size_t> indices) const;

  FilterFamily family() const { return family_; }
  std::size_t size() const { return op_.rows(); }
  const CsrMatrix& op() const { return op_; }

  /// Costs (order - 1) sparse mat-vec products per column of x.
  std::vector<Eigen::MatrixXd> basis(const Eigen::MatrixXd& x, std::size_t order) const;
  /// Adjoint of `basis`: given dLoss/dZ_l, returns dLoss/dX.
  Eigen::MatrixXd basis_adjoint(std::vector<Eigen::MatrixXd> dz) const;

 private:
  FilterFamily family_ = FilterFamily::chebyshev;
  CsrMatrix op_;
};

/// sum_l theta_l T_l(L~) y by recursion; never forms T_l(L~).
Eigen::VectorXd chebyshev_filter(const CsrMatrix& scaled_laplacian, std::span<const double> theta,
                                 const Eigen::VectorXd& y);
Eigen::VectorXd chebyshev_filter(const LaplacianBundle& bundle, std::span<const double> theta,
                                 const Eigen::VectorXd& y);

/// sum_l theta_l A~^l y.
Eigen::VectorXd diffusion_filter(const CsrMatrix& normalized_adjacency, std::span<const double> theta,
                                 const Eigen::VectorXd& y);
Eigen::VectorXd diffusion_filter(const LaplacianBundle& bundle, std::span<const double> theta,
                                 const Eigen::VectorXd& y);

constexpr std::size_t kSpectralOracleBudget = 512;

/// Reference filter through the eigendecomposition L~ = U diag(lambda) U^T:
/// U p(diag(lambda)) U^T y with p = sum_l theta_l T_l. Test oracle; throws
/// OracleBudgetExceeded above kSpectralOracleBudget nodes.
Eigen::VectorXd exact_spectral_filter(const Eigen::MatrixXd& scaled_laplacian, std::span<const double> theta,
                                      const Eigen::VectorXd& y);
Eigen::VectorXd exact_spectral_filter(const LaplacianBundle& bundle, std::span<const double> theta,
                                      const Eigen::VectorXd& y);

enum class Activation { none, tanh };

/// H[:, q] = act(sum_p filter(theta[p, q, :], Y[:, p])).
Eigen::MatrixXd graph_conv_layer(const GraphFilter& filter, const FilterTensor& theta, const Eigen::MatrixXd& y,
                                 Activation activation);

struct GraphConvGradient {
  FilterTensor dtheta;
  Eigen::MatrixXd dy;
};

/// Gradient of sum(dout .* graph_conv_layer(...)) with respect to theta and y.
GraphConvGradient graph_conv_layer_backward(const GraphFilter& filter, const FilterTensor& theta,
                                            const Eigen::MatrixXd& y, Activation activation,
                                            const Eigen::MatrixXd& dout);

}  // namespace graphdf
