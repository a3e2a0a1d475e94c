// SPDX-License-Identifier: Apache-2.0
#include "graphdf/cells.hpp"

#include <cmath>

#include <fmt/format.h>

#include "graphdf/error.hpp"

namespace graphdf {

namespace {

using Eigen::ArrayXXd;
using Eigen::MatrixXd;

ArrayXXd sigmoid(const MatrixXd& a) { return 1.0 / (1.0 + (-a.array()).exp()); }

void check_finite(const MatrixXd& m, const char* gate) {
  if (!m.allFinite()) fail(ErrorKind::NumericOverflow, fmt::format("non-finite value in {}", gate));
}

MatrixXd conv(const std::vector<MatrixXd>& basis, const FilterTensor& theta, const MatrixXd& bias) {
  MatrixXd out = basis[0] * theta[0];
  for (std::size_t l = 1; l < theta.size(); ++l) out.noalias() += basis[l] * theta[l];
  out.rowwise() += bias.row(0);
  return out;
}

ArrayXXd peephole(const MatrixXd& w, const MatrixXd& c) {
  if (w.rows() == 1) return c.array().rowwise() * w.row(0).array();
  return w.array() * c.array();
}

void accumulate_peephole(MatrixXd& dw, const ArrayXXd& da, const MatrixXd& c) {
  const ArrayXXd prod = da * c.array();
  if (dw.rows() == 1)
    dw.row(0) += prod.colwise().sum().matrix();
  else
    dw += prod.matrix();
}

void accumulate_conv(FilterTensor& dtheta, const std::vector<MatrixXd>& basis, const MatrixXd& da) {
  for (std::size_t l = 0; l < dtheta.size(); ++l) dtheta[l].noalias() += basis[l].transpose() * da;
}

FilterTensor xavier_tensor(std::size_t order, Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  FilterTensor t;
  for (std::size_t l = 0; l < order; ++l) t.push_back(xavier_uniform(rows, cols, rng));
  return t;
}

void check_input(const MatrixXd& y, const MatrixXd& h_prev, std::size_t inputs, const char* cell) {
  require_shape(static_cast<std::size_t>(y.cols()) == inputs,
                fmt::format("{}: input has {} channels, expected {}", cell, y.cols(), inputs));
  require_shape(y.rows() == h_prev.rows(),
                fmt::format("{}: input has {} rows, state has {}", cell, y.rows(), h_prev.rows()));
}

MatrixXd hcat(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd x(a.rows(), a.cols() + b.cols());
  x << a, b;
  return x;
}

}  // namespace

MatrixXd xavier_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-a, a);
  MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = u(rng);
  return m;
}

GcrnLstmParams init_gcrn_lstm(std::size_t inputs, std::size_t hidden, std::size_t order, std::size_t nodes,
                              PeepholeMode peepholes, std::mt19937_64& rng) {
  require_shape(inputs >= 1 && hidden >= 1 && order >= 1, "GCRN-LSTM dimensions must be positive");
  const auto in = static_cast<Eigen::Index>(inputs + hidden);
  const auto q = static_cast<Eigen::Index>(hidden);
  const auto rows = peepholes == PeepholeMode::per_node ? static_cast<Eigen::Index>(nodes) : Eigen::Index{1};
  GcrnLstmParams p;
  p.theta_i = xavier_tensor(order, in, q, rng);
  p.theta_f = xavier_tensor(order, in, q, rng);
  p.theta_c = xavier_tensor(order, in, q, rng);
  p.theta_o = xavier_tensor(order, in, q, rng);
  p.w_i = xavier_uniform(rows, q, rng);
  p.w_f = xavier_uniform(rows, q, rng);
  p.w_o = xavier_uniform(rows, q, rng);
  p.b_i = MatrixXd::Zero(1, q);
  p.b_f = MatrixXd::Ones(1, q);
  p.b_c = MatrixXd::Zero(1, q);
  p.b_o = MatrixXd::Zero(1, q);
  return p;
}

DcgruParams init_dcgru(std::size_t inputs, std::size_t hidden, std::size_t order, std::mt19937_64& rng) {
  require_shape(inputs >= 1 && hidden >= 1 && order >= 1, "DCGRU dimensions must be positive");
  const auto in = static_cast<Eigen::Index>(inputs + hidden);
  const auto q = static_cast<Eigen::Index>(hidden);
  DcgruParams p;
  p.theta_r = xavier_tensor(order, in, q, rng);
  p.theta_u = xavier_tensor(order, in, q, rng);
  p.theta_c = xavier_tensor(order, in, q, rng);
  p.b_r = MatrixXd::Zero(1, q);
  p.b_u = MatrixXd::Zero(1, q);
  p.b_c = MatrixXd::Zero(1, q);
  return p;
}

LstmParams init_lstm(std::size_t inputs, std::size_t hidden, std::mt19937_64& rng) {
  require_shape(inputs >= 1 && hidden >= 1, "LSTM dimensions must be positive");
  const auto in = static_cast<Eigen::Index>(inputs + hidden);
  const auto q = static_cast<Eigen::Index>(hidden);
  LstmParams p;
  p.w_i = xavier_uniform(in, q, rng);
  p.w_f = xavier_uniform(in, q, rng);
  p.w_c = xavier_uniform(in, q, rng);
  p.w_o = xavier_uniform(in, q, rng);
  p.b_i = MatrixXd::Zero(1, q);
  p.b_f = MatrixXd::Ones(1, q);
  p.b_c = MatrixXd::Zero(1, q);
  p.b_o = MatrixXd::Zero(1, q);
  return p;
}

// ---------------------------------------------------------------------------
// GCRN-LSTM

CellState gcrn_lstm_step(const GcrnLstmParams& p, const GraphFilter& filter, const CellState& state,
                         const MatrixXd& y, LstmCache* cache) {
  check_input(y, state.hidden, p.input_channels(), "gcrn_lstm_step");
  require_shape(p.w_i.rows() == 1 || p.w_i.rows() == y.rows(), "gcrn_lstm_step: peephole rows differ from nodes");
  LstmCache local;
  LstmCache& c = cache != nullptr ? *cache : local;
  c.x = hcat(y, state.hidden);
  c.basis = filter.basis(c.x, p.order());
  c.c_prev = state.cell;

  MatrixXd a_i = conv(c.basis, p.theta_i, p.b_i);
  a_i.array() += peephole(p.w_i, state.cell);
  check_finite(a_i, "input gate");
  c.i = sigmoid(a_i).matrix();

  MatrixXd a_f = conv(c.basis, p.theta_f, p.b_f);
  a_f.array() += peephole(p.w_f, state.cell);
  check_finite(a_f, "forget gate");
  c.f = sigmoid(a_f).matrix();

  const MatrixXd a_c = conv(c.basis, p.theta_c, p.b_c);
  check_finite(a_c, "cell candidate");
  c.g = a_c.array().tanh().matrix();

  c.c = (c.f.array() * state.cell.array() + c.i.array() * c.g.array()).matrix();
  check_finite(c.c, "cell state");

  MatrixXd a_o = conv(c.basis, p.theta_o, p.b_o);
  a_o.array() += peephole(p.w_o, c.c);
  check_finite(a_o, "output gate");
  c.o = sigmoid(a_o).matrix();

  c.tanh_c = c.c.array().tanh().matrix();
  return {(c.o.array() * c.tanh_c.array()).matrix(), c.c};
}

void gcrn_lstm_backward(const GcrnLstmParams& p, const GraphFilter& filter, const LstmCache& c,
                        const CellState& d_out, GcrnLstmParams& grads, CellState& d_prev, MatrixXd* dy) {
  const ArrayXXd dh = d_out.hidden.array();
  const ArrayXXd o = c.o.array();
  const ArrayXXd tc = c.tanh_c.array();

  const ArrayXXd da_o = dh * tc * o * (1.0 - o);
  ArrayXXd dc = d_out.cell.array() + dh * o * (1.0 - tc.square()) + peephole(p.w_o, da_o.matrix());
  accumulate_peephole(grads.w_o, da_o, c.c);

  const ArrayXXd i = c.i.array();
  const ArrayXXd f = c.f.array();
  const ArrayXXd g = c.g.array();
  const ArrayXXd da_f = dc * c.c_prev.array() * f * (1.0 - f);
  const ArrayXXd da_i = dc * g * i * (1.0 - i);
  const ArrayXXd da_c = dc * i * (1.0 - g.square());

  accumulate_peephole(grads.w_i, da_i, c.c_prev);
  accumulate_peephole(grads.w_f, da_f, c.c_prev);
  d_prev.cell = (dc * f + peephole(p.w_i, da_i.matrix()) + peephole(p.w_f, da_f.matrix())).matrix();

  grads.b_i.row(0) += da_i.colwise().sum().matrix();
  grads.b_f.row(0) += da_f.colwise().sum().matrix();
  grads.b_c.row(0) += da_c.colwise().sum().matrix();
  grads.b_o.row(0) += da_o.colwise().sum().matrix();

  const MatrixXd mi = da_i.matrix(), mf = da_f.matrix(), mc = da_c.matrix(), mo = da_o.matrix();
  accumulate_conv(grads.theta_i, c.basis, mi);
  accumulate_conv(grads.theta_f, c.basis, mf);
  accumulate_conv(grads.theta_c, c.basis, mc);
  accumulate_conv(grads.theta_o, c.basis, mo);

  std::vector<MatrixXd> dz;
  dz.reserve(p.order());
  for (std::size_t l = 0; l < p.order(); ++l) {
    MatrixXd d = mi * p.theta_i[l].transpose();
    d.noalias() += mf * p.theta_f[l].transpose();
    d.noalias() += mc * p.theta_c[l].transpose();
    d.noalias() += mo * p.theta_o[l].transpose();
    dz.push_back(std::move(d));
  }
  const MatrixXd dx = filter.basis_adjoint(std::move(dz));
  const auto inputs = static_cast<Eigen::Index>(p.input_channels());
  d_prev.hidden = dx.rightCols(dx.cols() - inputs);
  if (dy != nullptr) *dy = dx.leftCols(inputs);
}

// ---------------------------------------------------------------------------
// DCGRU

CellState dcgru_step(const DcgruParams& p, const GraphFilter& filter, const CellState& state, const MatrixXd& y,
                     GruCache* cache) {
  check_input(y, state.hidden, p.input_channels(), "dcgru_step");
  GruCache local;
  GruCache& c = cache != nullptr ? *cache : local;
  c.h_prev = state.hidden;
  c.basis = filter.basis(hcat(y, state.hidden), p.order());

  const MatrixXd a_r = conv(c.basis, p.theta_r, p.b_r);
  check_finite(a_r, "reset gate");
  c.r = sigmoid(a_r).matrix();
  const MatrixXd a_u = conv(c.basis, p.theta_u, p.b_u);
  check_finite(a_u, "update gate");
  c.u = sigmoid(a_u).matrix();

  c.basis2 = filter.basis(hcat(y, (c.r.array() * state.hidden.array()).matrix()), p.order());
  const MatrixXd a_c = conv(c.basis2, p.theta_c, p.b_c);
  check_finite(a_c, "candidate");
  c.cand = a_c.array().tanh().matrix();

  const ArrayXXd u = c.u.array();
  return {(u * state.hidden.array() + (1.0 - u) * c.cand.array()).matrix(), MatrixXd()};
}

void dcgru_backward(const DcgruParams& p, const GraphFilter& filter, const GruCache& c, const CellState& d_out,
                    DcgruParams& grads, CellState& d_prev, MatrixXd* dy) {
  const ArrayXXd dh = d_out.hidden.array();
  const ArrayXXd u = c.u.array();
  const ArrayXXd r = c.r.array();
  const ArrayXXd cand = c.cand.array();
  const ArrayXXd h_prev = c.h_prev.array();
  const auto inputs = static_cast<Eigen::Index>(p.input_channels());

  const MatrixXd da_u = (dh * (h_prev - cand) * u * (1.0 - u)).matrix();
  const MatrixXd da_c = (dh * (1.0 - u) * (1.0 - cand.square())).matrix();

  grads.b_c.row(0) += da_c.colwise().sum();
  accumulate_conv(grads.theta_c, c.basis2, da_c);
  std::vector<MatrixXd> dz2;
  for (std::size_t l = 0; l < p.order(); ++l) dz2.push_back(da_c * p.theta_c[l].transpose());
  const MatrixXd dx2 = filter.basis_adjoint(std::move(dz2));
  const ArrayXXd d_rh = dx2.rightCols(dx2.cols() - inputs).array();

  const MatrixXd da_r = (d_rh * h_prev * r * (1.0 - r)).matrix();
  ArrayXXd dh_prev = dh * u + d_rh * r;

  grads.b_r.row(0) += da_r.colwise().sum();
  grads.b_u.row(0) += da_u.colwise().sum();
  accumulate_conv(grads.theta_r, c.basis, da_r);
  accumulate_conv(grads.theta_u, c.basis, da_u);
  std::vector<MatrixXd> dz;
  for (std::size_t l = 0; l < p.order(); ++l) {
    MatrixXd d = da_r * p.theta_r[l].transpose();
    d.noalias() += da_u * p.theta_u[l].transpose();
    dz.push_back(std::move(d));
  }
  const MatrixXd dx = filter.basis_adjoint(std::move(dz));
  dh_prev += dx.rightCols(dx.cols() - inputs).array();
  d_prev.hidden = dh_prev.matrix();
  d_prev.cell = MatrixXd();
  if (dy != nullptr) *dy = dx.leftCols(inputs) + dx2.leftCols(inputs);
}

// ---------------------------------------------------------------------------
// Dense LSTM

CellState lstm_step(const LstmParams& p, const CellState& state, const MatrixXd& y, LstmCache* cache) {
  check_input(y, state.hidden, p.input_channels(), "lstm_step");
  LstmCache local;
  LstmCache& c = cache != nullptr ? *cache : local;
  c.x = hcat(y, state.hidden);
  c.basis.assign(1, c.x);
  c.c_prev = state.cell;

  auto gate = [&](const MatrixXd& w, const MatrixXd& b, const char* name) {
    MatrixXd a = c.x * w;
    a.rowwise() += b.row(0);
    check_finite(a, name);
    return a;
  };
  c.i = sigmoid(gate(p.w_i, p.b_i, "input gate")).matrix();
  c.f = sigmoid(gate(p.w_f, p.b_f, "forget gate")).matrix();
  c.g = gate(p.w_c, p.b_c, "cell candidate").array().tanh().matrix();
  c.o = sigmoid(gate(p.w_o, p.b_o, "output gate")).matrix();
  c.c = (c.f.array() * state.cell.array() + c.i.array() * c.g.array()).matrix();
  check_finite(c.c, "cell state");
  c.tanh_c = c.c.array().tanh().matrix();
  return {(c.o.array() * c.tanh_c.array()).matrix(), c.c};
}

void lstm_backward(const LstmParams& p, const LstmCache& c, const CellState& d_out, LstmParams& grads,
                   CellState& d_prev, MatrixXd* dy) {
  const ArrayXXd dh = d_out.hidden.array();
  const ArrayXXd o = c.o.array(), i = c.i.array(), f = c.f.array(), g = c.g.array();
  const ArrayXXd tc = c.tanh_c.array();

  const ArrayXXd dc = d_out.cell.array() + dh * o * (1.0 - tc.square());
  const MatrixXd da_o = (dh * tc * o * (1.0 - o)).matrix();
  const MatrixXd da_f = (dc * c.c_prev.array() * f * (1.0 - f)).matrix();
  const MatrixXd da_i = (dc * g * i * (1.0 - i)).matrix();
  const MatrixXd da_c = (dc * i * (1.0 - g.square())).matrix();
  d_prev.cell = (dc * f).matrix();

  grads.w_i.noalias() += c.x.transpose() * da_i;
  grads.w_f.noalias() += c.x.transpose() * da_f;
  grads.w_c.noalias() += c.x.transpose() * da_c;
  grads.w_o.noalias() += c.x.transpose() * da_o;
  grads.b_i.row(0) += da_i.colwise().sum();
  grads.b_f.row(0) += da_f.colwise().sum();
  grads.b_c.row(0) += da_c.colwise().sum();
  grads.b_o.row(0) += da_o.colwise().sum();

  MatrixXd dx = da_i * p.w_i.transpose();
  dx.noalias() += da_f * p.w_f.transpose();
  dx.noalias() += da_c * p.w_c.transpose();
  dx.noalias() += da_o * p.w_o.transpose();
  const auto inputs = static_cast<Eigen::Index>(p.input_channels());
  d_prev.hidden = dx.rightCols(dx.cols() - inputs);
  if (dy != nullptr) *dy = dx.leftCols(inputs);
}

// ---------------------------------------------------------------------------
// Dispatch

CellState zero_state(const CellParams& p, Eigen::Index rows) {
  const auto q = static_cast<Eigen::Index>(hidden_size(p));
  CellState s{MatrixXd::Zero(rows, q), MatrixXd()};
  if (!std::holds_alternative<DcgruParams>(p)) s.cell = MatrixXd::Zero(rows, q);
  return s;
}

std::size_t hidden_size(const CellParams& p) {
  return std::visit([](const auto& cell) { return cell.hidden(); }, p);
}

CellState cell_step(const CellParams& p, const GraphFilter& filter, const CellState& state, const MatrixXd& y,
                    CellCache* cache) {
  if (const auto* g = std::get_if<GcrnLstmParams>(&p)) {
    LstmCache* c = nullptr;
    if (cache != nullptr) c = &cache->emplace<LstmCache>();
    return gcrn_lstm_step(*g, filter, state, y, c);
  }
  if (const auto* d = std::get_if<DcgruParams>(&p)) {
    GruCache* c = nullptr;
    if (cache != nullptr) c = &cache->emplace<GruCache>();
    return dcgru_step(*d, filter, state, y, c);
  }
  LstmCache* c = nullptr;
  if (cache != nullptr) c = &cache->emplace<LstmCache>();
  return lstm_step(std::get<LstmParams>(p), state, y, c);
}

void cell_backward(const CellParams& p, const GraphFilter& filter, const CellCache& cache, const CellState& d_out,
                   CellParams& grads, CellState& d_prev, MatrixXd* dy) {
  if (const auto* g = std::get_if<GcrnLstmParams>(&p)) {
    gcrn_lstm_backward(*g, filter, std::get<LstmCache>(cache), d_out, std::get<GcrnLstmParams>(grads), d_prev, dy);
  } else if (const auto* d = std::get_if<DcgruParams>(&p)) {
    dcgru_backward(*d, filter, std::get<GruCache>(cache), d_out, std::get<DcgruParams>(grads), d_prev, dy);
  } else {
    lstm_backward(std::get<LstmParams>(p), std::get<LstmCache>(cache), d_out, std::get<LstmParams>(grads), d_prev,
                  dy);
  }
}

}  // namespace graphdf
