// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "graphdf/spectral.hpp"

namespace graphdf {

/// Peephole weights are either node-indexed (M x Q) or one row broadcast to
/// every node (1 x Q), which lets a parameter set move between graphs.
enum class PeepholeMode { per_node, shared_row };

/// Graph-convolutional LSTM. Gate filters act on [Y, H_prev] and have
/// (P + Q) input channels, Q output channels and `order` slices.
struct GcrnLstmParams {
  FilterTensor theta_i, theta_f, theta_c, theta_o;
  Eigen::MatrixXd w_i, w_f, w_o;       // peepholes
  Eigen::MatrixXd b_i, b_f, b_c, b_o;  // 1 x Q

  std::size_t input_channels() const { return static_cast<std::size_t>(theta_i[0].rows()) - hidden(); }
  std::size_t hidden() const { return static_cast<std::size_t>(b_i.cols()); }
  std::size_t order() const { return theta_i.size(); }
};

/// Diffusion-convolutional GRU (reset R, update U, candidate C).
struct DcgruParams {
  FilterTensor theta_r, theta_u, theta_c;
  Eigen::MatrixXd b_r, b_u, b_c;  // 1 x Q

  std::size_t input_channels() const { return static_cast<std::size_t>(theta_r[0].rows()) - hidden(); }
  std::size_t hidden() const { return static_cast<std::size_t>(b_r.cols()); }
  std::size_t order() const { return theta_r.size(); }
};

/// Dense LSTM without peepholes; rows of the input are independent sequences.
struct LstmParams {
  Eigen::MatrixXd w_i, w_f, w_c, w_o;  // (P + Q) x Q, acting on [x, h_prev]
  Eigen::MatrixXd b_i, b_f, b_c, b_o;  // 1 x Q

  std::size_t input_channels() const { return static_cast<std::size_t>(w_i.rows()) - hidden(); }
  std::size_t hidden() const { return static_cast<std::size_t>(b_i.cols()); }
};

using CellParams = std::variant<GcrnLstmParams, DcgruParams, LstmParams>;

/// Hidden H and, for the LSTM cells, memory C (empty for the GRU).
struct CellState {
  Eigen::MatrixXd hidden;
  Eigen::MatrixXd cell;
};

struct LstmCache {
  Eigen::MatrixXd x;                    // [Y, H_prev]
  std::vector<Eigen::MatrixXd> basis;   // filter basis of x (just {x} for the dense cell)
  Eigen::MatrixXd c_prev, i, f, g, o, c, tanh_c;
};

struct GruCache {
  Eigen::MatrixXd h_prev;
  std::vector<Eigen::MatrixXd> basis;   // of [Y, H_prev]
  std::vector<Eigen::MatrixXd> basis2;  // of [Y, R .* H_prev]
  Eigen::MatrixXd r, u, cand;
};

using CellCache = std::variant<LstmCache, GruCache>;

// Initialization: Xavier/Glorot uniform weights, zero biases except the
// forget-gate bias of the LSTM cells, which starts at 1.
GcrnLstmParams init_gcrn_lstm(std::size_t inputs, std::size_t hidden, std::size_t order, std::size_t nodes,
                              PeepholeMode peepholes, std::mt19937_64& rng);
DcgruParams init_dcgru(std::size_t inputs, std::size_t hidden, std::size_t order, std::mt19937_64& rng);
LstmParams init_lstm(std::size_t inputs, std::size_t hidden, std::mt19937_64& rng);

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Eigen::MatrixXd xavier_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

CellState gcrn_lstm_step(const GcrnLstmParams& p, const GraphFilter& filter, const CellState& state,
                         const Eigen::MatrixXd& y, LstmCache* cache = nullptr);
CellState dcgru_step(const DcgruParams& p, const GraphFilter& filter, const CellState& state,
                     const Eigen::MatrixXd& y, GruCache* cache = nullptr);
CellState lstm_step(const LstmParams& p, const CellState& state, const Eigen::MatrixXd& y,
                    LstmCache* cache = nullptr);

/// Backward passes. `d_out` carries dLoss/dH_t and dLoss/dC_t; parameter
/// gradients are accumulated into `grads`; dLoss/dH_{t-1}, dLoss/dC_{t-1} are
/// written to `d_prev`, and dLoss/dY to `dy` when given.
void gcrn_lstm_backward(const GcrnLstmParams& p, const GraphFilter& filter, const LstmCache& cache,
                        const CellState& d_out, GcrnLstmParams& grads, CellState& d_prev,
                        Eigen::MatrixXd* dy = nullptr);
void dcgru_backward(const DcgruParams& p, const GraphFilter& filter, const GruCache& cache,
                    const CellState& d_out, DcgruParams& grads, CellState& d_prev, Eigen::MatrixXd* dy = nullptr);
void lstm_backward(const LstmParams& p, const LstmCache& cache, const CellState& d_out, LstmParams& grads,
                   CellState& d_prev, Eigen::MatrixXd* dy = nullptr);

// Variant dispatch. `filter` is ignored by the dense LSTM.
CellState zero_state(const CellParams& p, Eigen::Index rows);
std::size_t hidden_size(const CellParams& p);
CellState cell_step(const CellParams& p, const GraphFilter& filter, const CellState& state, const Eigen::MatrixXd& y,
                    CellCache* cache = nullptr);
void cell_backward(const CellParams& p, const GraphFilter& filter, const CellCache& cache, const CellState& d_out,
                   CellParams& grads, CellState& d_prev, Eigen::MatrixXd* dy = nullptr);

/// Visits every tensor as (name, matrix). Order is fixed per type.
template <typename Fn>
void for_each_tensor(GcrnLstmParams& p, Fn&& fn) {
  auto tensor = [&](const char* name, FilterTensor& t) {
    for (std::size_t l = 0; l < t.size(); ++l) fn(std::string(name) + "[" + std::to_string(l) + "]", t[l]);
  };
  tensor("theta_i", p.theta_i);
  tensor("theta_f", p.theta_f);
  tensor("theta_c", p.theta_c);
  tensor("theta_o", p.theta_o);
  fn(std::string("w_i"), p.w_i);
  fn(std::string("w_f"), p.w_f);
  fn(std::string("w_o"), p.w_o);
  fn(std::string("b_i"), p.b_i);
  fn(std::string("b_f"), p.b_f);
  fn(std::string("b_c"), p.b_c);
  fn(std::string("b_o"), p.b_o);
}

template <typename Fn>
void for_each_tensor(DcgruParams& p, Fn&& fn) {
  auto tensor = [&](const char* name, FilterTensor& t) {
    for (std::size_t l = 0; l < t.size(); ++l) fn(std::string(name) + "[" + std::to_string(l) + "]", t[l]);
  };
  tensor("theta_r", p.theta_r);
  tensor("theta_u", p.theta_u);
  tensor("theta_c", p.theta_c);
  fn(std::string("b_r"), p.b_r);
  fn(std::string("b_u"), p.b_u);
  fn(std::string("b_c"), p.b_c);
}

template <typename Fn>
void for_each_tensor(LstmParams& p, Fn&& fn) {
  fn(std::string("w_i"), p.w_i);
  fn(std::string("w_f"), p.w_f);
  fn(std::string("w_c"), p.w_c);
  fn(std::string("w_o"), p.w_o);
  fn(std::string("b_i"), p.b_i);
  fn(std::string("b_f"), p.b_f);
  fn(std::string("b_c"), p.b_c);
  fn(std::string("b_o"), p.b_o);
}

template <typename Fn>
void for_each_tensor(CellParams& p, Fn&& fn) {
  std::visit([&](auto& cell) { for_each_tensor(cell, fn); }, p);
}

/// Same structure, every entry zero.
template <typename Params>
Params zeros_like(Params p) {
  for_each_tensor(p, [](const std::string&, Eigen::MatrixXd& m) { m.setZero(); });
  return p;
}

}  // namespace graphdf
