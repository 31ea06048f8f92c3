#include "fldlt3/nn/two_branch.hpp"

#include <string>

#include "fldlt3/errors.hpp"

namespace fldlt3::nn {

TwoBranchNet::TwoBranchNet(const NetShape& shape) : shape_(shape) {
  if (shape.input_dim < 1 || shape.output_dim < 1 || shape.ff_width < 1 || shape.ff_depth < 1) {
    throw InvalidParameter("network dimensions must be positive");
  }
  Eigen::Index in = shape.input_dim;
  for (int i = 0; i < shape.ff_depth; ++i) {
    ff_.emplace_back("ff" + std::to_string(i), in, shape.ff_width, Activation::Relu);
    in = shape.ff_width;
  }
  Eigen::Index merge_in = shape.ff_width;
  if (shape.recurrent) {
    if (shape.embed_width < 1 || shape.lstm_units < 1) {
      throw InvalidParameter("recurrent branch dimensions must be positive");
    }
    embed_ = DenseLayer("embed", shape.input_dim, shape.embed_width, Activation::Relu);
    lstm_ = LSTMCell("lstm", shape.embed_width, shape.lstm_units);
    merge_in += shape.lstm_units;
  }
  merge_ = DenseLayer("merge", merge_in, shape.output_dim, shape.output_activation);
}

void TwoBranchNet::initialize(std::mt19937_64& rng) {
  for (auto& layer : ff_) layer.initialize(rng);
  if (shape_.recurrent) {
    embed_.initialize(rng);
    lstm_.initialize(rng);
  }
  merge_.initialize(rng);
}

LSTMState TwoBranchNet::initial_state(Eigen::Index batch) const {
  return LSTMState::zeros(shape_.recurrent ? shape_.lstm_units : 0, batch);
}

Matrix TwoBranchNet::merge_input(const Matrix& ff_out, const Matrix& hidden) const {
  if (!shape_.recurrent) return ff_out;
  Matrix joined(ff_out.rows() + hidden.rows(), ff_out.cols());
  joined.topRows(ff_out.rows()) = ff_out;
  joined.bottomRows(hidden.rows()) = hidden;
  return joined;
}

Matrix TwoBranchNet::forward(const Matrix& input, const LSTMState& state,
                             LSTMState& next_state) const {
  if (input.rows() != shape_.input_dim) throw ShapeMismatch("network input size mismatch");
  Matrix x = input;
  for (const auto& layer : ff_) x = layer.forward(x);
  if (shape_.recurrent) {
    next_state = lstm_.forward(embed_.forward(input), state);
  } else {
    next_state = state;
  }
  return merge_.forward(merge_input(x, next_state.hidden));
}

std::vector<Matrix> TwoBranchNet::forward_sequence(const std::vector<Matrix>& inputs,
                                                   const LSTMState& initial,
                                                   NetTape& tape) const {
  tape.steps.assign(inputs.size(), NetTape::Step{});
  tape.batch = inputs.empty() ? 0 : inputs.front().cols();
  std::vector<Matrix> outputs;
  outputs.reserve(inputs.size());
  LSTMState state = initial;
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    const Matrix& input = inputs[s];
    if (input.rows() != shape_.input_dim || input.cols() != tape.batch) {
      throw ShapeMismatch("network input size mismatch");
    }
    auto& step = tape.steps[s];
    step.ff.resize(ff_.size());
    Matrix x = input;
    for (std::size_t i = 0; i < ff_.size(); ++i) x = ff_[i].forward(x, step.ff[i]);
    if (shape_.recurrent) {
      state = lstm_.forward(embed_.forward(input, step.embed), state, step.lstm);
    }
    outputs.push_back(merge_.forward(merge_input(x, state.hidden), step.merge));
  }
  return outputs;
}

std::vector<Matrix> TwoBranchNet::backward(const NetTape& tape,
                                           const std::vector<Matrix>& grad_outputs) {
  if (tape.empty()) throw LifecycleError("backward called without a recorded forward pass");
  if (grad_outputs.size() != tape.steps.size()) {
    throw ShapeMismatch("one output gradient per recorded step is required");
  }
  const Eigen::Index batch = tape.batch;
  std::vector<Matrix> grad_inputs(tape.steps.size());
  Matrix carry_h;
  Matrix carry_c;
  if (shape_.recurrent) {
    carry_h = Matrix::Zero(shape_.lstm_units, batch);
    carry_c = Matrix::Zero(shape_.lstm_units, batch);
  }
  for (std::size_t s = tape.steps.size(); s-- > 0;) {
    const auto& step = tape.steps[s];
    const Matrix g_merge = merge_.backward(grad_outputs[s], step.merge);
    Matrix g = g_merge.topRows(shape_.ff_width);
    for (std::size_t i = ff_.size(); i-- > 0;) g = ff_[i].backward(g, step.ff[i]);
    if (shape_.recurrent) {
      const Matrix g_h = g_merge.bottomRows(shape_.lstm_units) + carry_h;
      auto lg = lstm_.backward(g_h, carry_c, step.lstm);
      carry_h = std::move(lg.prev_hidden);
      carry_c = std::move(lg.prev_cell);
      g += embed_.backward(lg.input, step.embed);
    }
    grad_inputs[s] = std::move(g);
  }
  return grad_inputs;
}

void TwoBranchNet::zero_grad() {
  for (Param* p : params()) p->grad.setZero();
}

ParamList TwoBranchNet::params() {
  ParamList out;
  for (auto& layer : ff_) layer.collect(out);
  if (shape_.recurrent) {
    embed_.collect(out);
    lstm_.collect(out);
  }
  merge_.collect(out);
  return out;
}

ConstParamList TwoBranchNet::params() const {
  ConstParamList out;
  for (const auto& layer : ff_) layer.collect(out);
  if (shape_.recurrent) {
    embed_.collect(out);
    lstm_.collect(out);
  }
  merge_.collect(out);
  return out;
}

std::size_t TwoBranchNet::num_parameters() const {
  std::size_t n = 0;
  for (const Param* p : params()) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void soft_update(const ParamList& target, const ConstParamList& online, double phi) {
  if (!(phi > 0.0 && phi <= 1.0)) throw InvalidParameter("soft update coefficient must be in (0, 1]");
  if (target.size() != online.size()) throw ShapeMismatch("soft update: parameter count mismatch");
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i]->value.rows() != online[i]->value.rows() ||
        target[i]->value.cols() != online[i]->value.cols()) {
      throw ShapeMismatch("soft update: shape mismatch at " + target[i]->name);
    }
  }
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (phi == 1.0) {
      target[i]->value = online[i]->value;
    } else {
      target[i]->value = phi * online[i]->value + (1.0 - phi) * target[i]->value;
    }
  }
}

void soft_update(TwoBranchNet& target, const TwoBranchNet& online, double phi) {
  soft_update(target.params(), online.params(), phi);
}

void copy_parameters(TwoBranchNet& target, const TwoBranchNet& source) {
  soft_update(target, source, 1.0);
}

}  // namespace fldlt3::nn
