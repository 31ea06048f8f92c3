#include "fldlt3/nn/lstm.hpp"

#include <cmath>

#include "fldlt3/errors.hpp"

namespace fldlt3::nn {

Matrix sigmoid(const Matrix& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

namespace {

void fill_uniform(Matrix& m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
}

Matrix add_bias(Matrix m, const Param& bias) {
  m.colwise() += bias.value.col(0);
  return m;
}

}  // namespace

LSTMCell::LSTMCell(std::string name, Eigen::Index input_dim, Eigen::Index units)
    : input_dim_(input_dim),
      units_(units),
      w_f_(name + ".W_f", units, 2 * units + input_dim),
      e_f_(name + ".e_f", units, 1),
      w_p_(name + ".W_p", units, 2 * units + input_dim),
      e_p_(name + ".e_p", units, 1),
      w_c_(name + ".W_c", units, units + input_dim),
      e_c_(name + ".e_c", units, 1),
      w_o_(name + ".W_o", units, 2 * units + input_dim),
      e_o_(name + ".e_o", units, 1) {}

void LSTMCell::initialize(std::mt19937_64& rng) {
  const double wide = 1.0 / std::sqrt(static_cast<double>(2 * units_ + input_dim_));
  const double narrow = 1.0 / std::sqrt(static_cast<double>(units_ + input_dim_));
  fill_uniform(w_f_.value, wide, rng);
  fill_uniform(e_f_.value, wide, rng);
  fill_uniform(w_p_.value, wide, rng);
  fill_uniform(e_p_.value, wide, rng);
  fill_uniform(w_c_.value, narrow, rng);
  fill_uniform(e_c_.value, narrow, rng);
  fill_uniform(w_o_.value, wide, rng);
  fill_uniform(e_o_.value, wide, rng);
}

LSTMState LSTMCell::forward(const Matrix& input, const LSTMState& prev) const {
  LSTMCache scratch;
  return forward(input, prev, scratch);
}

LSTMState LSTMCell::forward(const Matrix& input, const LSTMState& prev, LSTMCache& c) const {
  const Eigen::Index n = units_;
  const Eigen::Index m = input_dim_;
  if (input.rows() != m || prev.hidden.rows() != n || prev.cell.rows() != n ||
      prev.hidden.cols() != input.cols() || prev.cell.cols() != input.cols()) {
    throw ShapeMismatch(w_f_.name + ": LSTM input/state shape mismatch");
  }
  c.input = input;
  c.prev_hidden = prev.hidden;
  c.prev_cell = prev.cell;

  // blocks: [h_prev | C_prev | x] for F and p
  auto gate_hcx = [&](const Param& w, const Param& e) {
    Matrix pre = w.value.leftCols(n) * prev.hidden;
    pre.noalias() += w.value.middleCols(n, n) * prev.cell;
    pre.noalias() += w.value.rightCols(m) * input;
    return sigmoid(add_bias(std::move(pre), e));
  };
  c.forget = gate_hcx(w_f_, e_f_);
  c.in_gate = gate_hcx(w_p_, e_p_);

  Matrix cand = w_c_.value.leftCols(n) * prev.hidden;
  cand.noalias() += w_c_.value.rightCols(m) * input;
  c.candidate = add_bias(std::move(cand), e_c_).array().tanh().matrix();

  c.cell = c.forget.cwiseProduct(prev.cell) + c.in_gate.cwiseProduct(c.candidate);

  // blocks: [C | h_prev | x] for o
  Matrix out = w_o_.value.leftCols(n) * c.cell;
  out.noalias() += w_o_.value.middleCols(n, n) * prev.hidden;
  out.noalias() += w_o_.value.rightCols(m) * input;
  c.out_gate = sigmoid(add_bias(std::move(out), e_o_));

  c.tanh_cell = c.cell.array().tanh().matrix();
  return LSTMState{c.out_gate.cwiseProduct(c.tanh_cell), c.cell};
}

LSTMCell::StepGrad LSTMCell::backward(const Matrix& grad_hidden, const Matrix& grad_cell,
                                      const LSTMCache& c) {
  const Eigen::Index n = units_;
  const Eigen::Index m = input_dim_;
  if (grad_hidden.rows() != n || grad_hidden.cols() != c.cell.cols() ||
      grad_cell.rows() != n || grad_cell.cols() != c.cell.cols()) {
    throw ShapeMismatch(w_f_.name + ": LSTM gradient shape mismatch");
  }
  StepGrad g;

  const Matrix d_out = grad_hidden.cwiseProduct(c.tanh_cell);
  Matrix d_cell = grad_cell + grad_hidden.cwiseProduct(c.out_gate).cwiseProduct(
                                  (1.0 - c.tanh_cell.array().square()).matrix());
  const Matrix dz_o =
      d_out.cwiseProduct((c.out_gate.array() * (1.0 - c.out_gate.array())).matrix());
  w_o_.grad.leftCols(n).noalias() += dz_o * c.cell.transpose();
  w_o_.grad.middleCols(n, n).noalias() += dz_o * c.prev_hidden.transpose();
  w_o_.grad.rightCols(m).noalias() += dz_o * c.input.transpose();
  e_o_.grad.col(0) += dz_o.rowwise().sum();
  d_cell.noalias() += w_o_.value.leftCols(n).transpose() * dz_o;
  g.prev_hidden = w_o_.value.middleCols(n, n).transpose() * dz_o;
  g.input = w_o_.value.rightCols(m).transpose() * dz_o;

  const Matrix dz_f = d_cell.cwiseProduct(c.prev_cell).cwiseProduct(
      (c.forget.array() * (1.0 - c.forget.array())).matrix());
  const Matrix dz_p = d_cell.cwiseProduct(c.candidate).cwiseProduct(
      (c.in_gate.array() * (1.0 - c.in_gate.array())).matrix());
  const Matrix dz_c = d_cell.cwiseProduct(c.in_gate).cwiseProduct(
      (1.0 - c.candidate.array().square()).matrix());
  g.prev_cell = d_cell.cwiseProduct(c.forget);

  for (auto [w, e, dz] : {std::tuple{&w_f_, &e_f_, &dz_f}, std::tuple{&w_p_, &e_p_, &dz_p}}) {
    w->grad.leftCols(n).noalias() += *dz * c.prev_hidden.transpose();
    w->grad.middleCols(n, n).noalias() += *dz * c.prev_cell.transpose();
    w->grad.rightCols(m).noalias() += *dz * c.input.transpose();
    e->grad.col(0) += dz->rowwise().sum();
    g.prev_hidden.noalias() += w->value.leftCols(n).transpose() * *dz;
    g.prev_cell.noalias() += w->value.middleCols(n, n).transpose() * *dz;
    g.input.noalias() += w->value.rightCols(m).transpose() * *dz;
  }

  w_c_.grad.leftCols(n).noalias() += dz_c * c.prev_hidden.transpose();
  w_c_.grad.rightCols(m).noalias() += dz_c * c.input.transpose();
  e_c_.grad.col(0) += dz_c.rowwise().sum();
  g.prev_hidden.noalias() += w_c_.value.leftCols(n).transpose() * dz_c;
  g.input.noalias() += w_c_.value.rightCols(m).transpose() * dz_c;
  return g;
}

void LSTMCell::collect(ParamList& out) {
  for (Param* p : {&w_f_, &e_f_, &w_p_, &e_p_, &w_c_, &e_c_, &w_o_, &e_o_}) out.push_back(p);
}

void LSTMCell::collect(ConstParamList& out) const {
  for (const Param* p : {&w_f_, &e_f_, &w_p_, &e_p_, &w_c_, &e_c_, &w_o_, &e_o_}) {
    out.push_back(p);
  }
}

}  // namespace fldlt3::nn
