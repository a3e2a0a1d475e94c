// SPDX-License-Identifier: Apache-2.0
#include "graphdf/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "graphdf/error.hpp"

namespace graphdf {

GraphFilter::GraphFilter(FilterFamily family, CsrMatrix op) : family_(family), op_(std::move(op)) {
  require_shape(op_.rows() == op_.cols(), "graph filter operator must be square");
}

GraphFilter GraphFilter::chebyshev(const LaplacianBundle& bundle) {
  return {FilterFamily::chebyshev, bundle.scaled_laplacian};
}

GraphFilter GraphFilter::diffusion(const LaplacianBundle& bundle) {
  return {FilterFamily::diffusion, bundle.normalized_adjacency};
}

GraphFilter GraphFilter::from_bundle(FilterFamily family, const LaplacianBundle& bundle) {
  return family == FilterFamily::chebyshev ? chebyshev(bundle) : diffusion(bundle);
}

GraphFilter GraphFilter::restrict_to(std::span<const std::size_t> indices) const {
  return {family_, op_.principal_submatrix(indices)};
}

std::vector<Eigen::MatrixXd> GraphFilter::basis(const Eigen::MatrixXd& x, std::size_t order) const {
  require_shape(order >= 1, "filter order must be >= 1");
  require_shape(static_cast<std::size_t>(x.rows()) == size(),
                fmt::format("signal has {} rows, operator has {}", x.rows(), size()));
  std::vector<Eigen::MatrixXd> z;
  z.reserve(order);
  z.push_back(x);
  if (order >= 2) z.push_back(op_.multiply(x));
  for (std::size_t l = 2; l < order; ++l) {
    if (family_ == FilterFamily::chebyshev)
      z.push_back(2.0 * op_.multiply(z[l - 1]) - z[l - 2]);
    else
      z.push_back(op_.multiply(z[l - 1]));
  }
  return z;
}

Eigen::MatrixXd GraphFilter::basis_adjoint(std::vector<Eigen::MatrixXd> dz) const {
  require_shape(!dz.empty(), "empty basis gradient");
  const auto order = dz.size();
  for (std::size_t l = order - 1; l >= 1; --l) {
    if (family_ == FilterFamily::chebyshev && l >= 2) {
      dz[l - 1] += 2.0 * op_.multiply_transpose(dz[l]);
      dz[l - 2] -= dz[l];
    } else {
      dz[l - 1] += op_.multiply_transpose(dz[l]);
    }
  }
  return std::move(dz[0]);
}

namespace {

Eigen::VectorXd combine(const std::vector<Eigen::MatrixXd>& basis, std::span<const double> theta) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(basis.front().rows());
  for (std::size_t l = 0; l < theta.size(); ++l) out += theta[l] * basis[l].col(0);
  return out;
}

}  // namespace

Eigen::VectorXd chebyshev_filter(const CsrMatrix& scaled_laplacian, std::span<const double> theta,
                                 const Eigen::VectorXd& y) {
  require_shape(!theta.empty(), "Chebyshev coefficients must be non-empty");
  require_shape(static_cast<std::size_t>(y.size()) == scaled_laplacian.rows(), "signal/operator size mismatch");
  const GraphFilter f(FilterFamily::chebyshev, scaled_laplacian);
  return combine(f.basis(y, theta.size()), theta);
}

Eigen::VectorXd chebyshev_filter(const LaplacianBundle& bundle, std::span<const double> theta,
                                 const Eigen::VectorXd& y) {
  return chebyshev_filter(bundle.scaled_laplacian, theta, y);
}

Eigen::VectorXd diffusion_filter(const CsrMatrix& normalized_adjacency, std::span<const double> theta,
                                 const Eigen::VectorXd& y) {
  require_shape(!theta.empty(), "diffusion coefficients must be non-empty");
  require_shape(static_cast<std::size_t>(y.size()) == normalized_adjacency.rows(), "signal/operator size mismatch");
  const GraphFilter f(FilterFamily::diffusion, normalized_adjacency);
  return combine(f.basis(y, theta.size()), theta);
}

Eigen::VectorXd diffusion_filter(const LaplacianBundle& bundle, std::span<const double> theta,
                                 const Eigen::VectorXd& y) {
  return diffusion_filter(bundle.normalized_adjacency, theta, y);
}

Eigen::VectorXd exact_spectral_filter(const Eigen::MatrixXd& scaled_laplacian, std::span<const double> theta,
                                      const Eigen::VectorXd& y) {
  const auto m = scaled_laplacian.rows();
  if (static_cast<std::size_t>(m) > kSpectralOracleBudget)
    fail(ErrorKind::OracleBudgetExceeded,
         fmt::format("{} nodes exceeds the dense eigendecomposition budget of {}", m, kSpectralOracleBudget));
  require_shape(scaled_laplacian.cols() == m && y.size() == m, "signal/operator size mismatch");
  require_shape(!theta.empty(), "Chebyshev coefficients must be non-empty");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled_laplacian);
  const Eigen::VectorXd lambda = eig.eigenvalues();
  Eigen::VectorXd response(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    double t_prev = 1.0;
    double t_cur = lambda(k);
    double p = theta[0];
    if (theta.size() > 1) p += theta[1] * t_cur;
    for (std::size_t l = 2; l < theta.size(); ++l) {
      const double t_next = 2.0 * lambda(k) * t_cur - t_prev;
      t_prev = t_cur;
      t_cur = t_next;
      p += theta[l] * t_cur;
    }
    response(k) = p;
  }
  const Eigen::MatrixXd& u = eig.eigenvectors();
  return u * (response.asDiagonal() * (u.transpose() * y));
}

Eigen::VectorXd exact_spectral_filter(const LaplacianBundle& bundle, std::span<const double> theta,
                                      const Eigen::VectorXd& y) {
  return exact_spectral_filter(bundle.scaled_laplacian.to_dense(), theta, y);
}

namespace {

Eigen::MatrixXd conv_preactivation(const std::vector<Eigen::MatrixXd>& z, const FilterTensor& theta) {
  Eigen::MatrixXd out = z[0] * theta[0];
  for (std::size_t l = 1; l < theta.size(); ++l) out.noalias() += z[l] * theta[l];
  return out;
}

void check_tensor(const FilterTensor& theta, const Eigen::MatrixXd& y) {
  require_shape(!theta.empty(), "filter tensor needs at least one order");
  for (const auto& slice : theta)
    require_shape(slice.rows() == y.cols() && slice.cols() == theta[0].cols(),
                  fmt::format("filter slice {}x{} does not match {} input channels", slice.rows(), slice.cols(),
                              y.cols()));
}

}  // namespace

Eigen::MatrixXd graph_conv_layer(const GraphFilter& filter, const FilterTensor& theta, const Eigen::MatrixXd& y,
                                 Activation activation) {
  check_tensor(theta, y);
  Eigen::MatrixXd out = conv_preactivation(filter.basis(y, theta.size()), theta);
  if (activation == Activation::tanh) out = out.array().tanh().matrix();
  return out;
}

GraphConvGradient graph_conv_layer_backward(const GraphFilter& filter, const FilterTensor& theta,
                                            const Eigen::MatrixXd& y, Activation activation,
                                            const Eigen::MatrixXd& dout) {
  check_tensor(theta, y);
  const auto z = filter.basis(y, theta.size());
  Eigen::MatrixXd dpre = dout;
  if (activation == Activation::tanh) {
    const Eigen::ArrayXXd h = conv_preactivation(z, theta).array().tanh();
    dpre = (dout.array() * (1.0 - h.square())).matrix();
  }
  GraphConvGradient g;
  std::vector<Eigen::MatrixXd> dz;
  for (std::size_t l = 0; l < theta.size(); ++l) {
    g.dtheta.push_back(z[l].transpose() * dpre);
    dz.push_back(dpre * theta[l].transpose());
  }
  g.dy = filter.basis_adjoint(std::move(dz));
  return g;
}

}  // namespace graphdf
