#pragma once

#include <random>
#include <string>

#include "fldlt3/nn/param.hpp"

namespace fldlt3::nn {

/// Hidden and cell vectors, one column per batch entry.
struct LSTMState {
  Matrix hidden;
  Matrix cell;

  static LSTMState zeros(Eigen::Index units, Eigen::Index batch = 1) {
    return LSTMState{Matrix::Zero(units, batch), Matrix::Zero(units, batch)};
  }
};

struct LSTMCache {
  Matrix input;
  Matrix prev_hidden;
  Matrix prev_cell;
  Matrix forget;     // F
  Matrix in_gate;    // p
  Matrix candidate;  // tanh(W_c [h, x] + e_c)
  Matrix cell;       // C
  Matrix out_gate;   // o
  Matrix tanh_cell;
};

/// LSTM cell with peephole-style gate inputs:
///   F = sig(W_f [h_prev, C_prev, x] + e_f)
///   p = sig(W_p [h_prev, C_prev, x] + e_p)
///   C = F * C_prev + p * tanh(W_c [h_prev, x] + e_c)
///   o = sig(W_o [C, h_prev, x] + e_o)
///   h = o * tanh(C)
/// The output gate reads the updated cell.
class LSTMCell {
 public:
  LSTMCell() = default;
  LSTMCell(std::string name, Eigen::Index input_dim, Eigen::Index units);

  void initialize(std::mt19937_64& rng);

  [[nodiscard]] LSTMState forward(const Matrix& input, const LSTMState& prev) const;
  LSTMState forward(const Matrix& input, const LSTMState& prev, LSTMCache& cache) const;

  /// Gradients flowing out of one step.
  struct StepGrad {
    Matrix input;
    Matrix prev_hidden;
    Matrix prev_cell;
  };
  /// `grad_hidden` and `grad_cell` are the total gradients arriving at this
  /// step's outputs. Accumulates parameter gradients.
  StepGrad backward(const Matrix& grad_hidden, const Matrix& grad_cell, const LSTMCache& cache);

  [[nodiscard]] Eigen::Index input_dim() const { return input_dim_; }
  [[nodiscard]] Eigen::Index units() const { return units_; }

  Param& w_forget() { return w_f_; }
  Param& w_input() { return w_p_; }
  Param& w_cell() { return w_c_; }
  Param& w_output() { return w_o_; }
  Param& b_forget() { return e_f_; }
  Param& b_input() { return e_p_; }
  Param& b_cell() { return e_c_; }
  Param& b_output() { return e_o_; }

  void collect(ParamList& out);
  void collect(ConstParamList& out) const;

 private:
  Eigen::Index input_dim_ = 0;
  Eigen::Index units_ = 0;
  Param w_f_, e_f_;
  Param w_p_, e_p_;
  Param w_c_, e_c_;
  Param w_o_, e_o_;
};

Matrix sigmoid(const Matrix& x);

}  // namespace fldlt3::nn
